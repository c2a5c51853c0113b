//! Physical line description, train schedules, and timetable rules.
//!
//! Stations are numbered 1..=S in travel direction. A schedule stores the
//! departure time at each station; the arrival at a station is its
//! departure minus its dwell. Departure times at successive stations are
//! linked by the propagation rule, consecutive trains are separated by a
//! per-station safety headway, and dwells are bounded band-style between a
//! minimum and maximum whenever the train stops.

use crate::demand::OdMatrix;
use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Numerical slack for feasibility checks, minutes.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Track between two adjacent stations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub length_km: f64,
    /// Fastest allowed pace, minutes per km.
    pub unit_time_min: f64,
    /// Slowest allowed pace, minutes per km.
    pub unit_time_max: f64,
    /// Time lost accelerating out of a stop at the downstream station.
    pub accel_time: f64,
    /// Time lost braking into a stop at the downstream station.
    pub decel_time: f64,
}

impl Segment {
    pub fn new(
        length_km: f64,
        unit_time_min: f64,
        unit_time_max: f64,
        accel_time: f64,
        decel_time: f64,
    ) -> Result<Self> {
        let all = [length_km, unit_time_min, unit_time_max, accel_time, decel_time];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("segment parameters must be finite"));
        }
        if length_km <= 0.0 {
            return Err(Error::invalid("segment length must be positive"));
        }
        if unit_time_min <= 0.0 || unit_time_max < unit_time_min {
            return Err(Error::invalid(
                "segment pace bounds need 0 < fastest <= slowest",
            ));
        }
        if accel_time < 0.0 || decel_time < 0.0 {
            return Err(Error::invalid("acceleration times cannot be negative"));
        }
        Ok(Segment {
            length_km,
            unit_time_min,
            unit_time_max,
            accel_time,
            decel_time,
        })
    }
}

/// Immutable description of the line and its operating rules.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    segments: Vec<Segment>,
    /// Safety separation after a departing train, per station.
    headways: Vec<f64>,
    /// Per (station, train) headway overrides, 1-based keys.
    headway_overrides: BTreeMap<(usize, usize), f64>,
    min_stop: f64,
    max_stop: f64,
    /// Dwell minutes added per passenger that can board.
    boarding_rate: f64,
    /// Planning horizon, minutes.
    horizon: f64,
    /// Whether stop-dependent acceleration losses extend travel times.
    accel_penalty: bool,
}

impl Line {
    pub fn new(
        segments: Vec<Segment>,
        headways: Vec<f64>,
        min_stop: f64,
        max_stop: f64,
        boarding_rate: f64,
        horizon: f64,
        accel_penalty: bool,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("a line needs at least one segment"));
        }
        if headways.len() != segments.len() + 1 {
            return Err(Error::invalid(format!(
                "expected one headway per station ({}), got {}",
                segments.len() + 1,
                headways.len()
            )));
        }
        if headways.iter().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(Error::invalid("headways must be finite and nonnegative"));
        }
        if !(min_stop.is_finite() && max_stop.is_finite()) || min_stop < 0.0 || max_stop < min_stop
        {
            return Err(Error::invalid("stop bounds need 0 <= minimum <= maximum"));
        }
        if !boarding_rate.is_finite() || boarding_rate < 0.0 {
            return Err(Error::invalid("boarding rate must be finite and nonnegative"));
        }
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        Ok(Line {
            segments,
            headways,
            headway_overrides: BTreeMap::new(),
            min_stop,
            max_stop,
            boarding_rate,
            horizon,
            accel_penalty,
        })
    }

    pub fn n_stations(&self) -> usize {
        self.segments.len() + 1
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    /// Segment leaving station `i`, 1-based, valid for i in 1..S.
    pub fn segment(&self, i: usize) -> &Segment {
        &self.segments[i - 1]
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn min_stop(&self) -> f64 {
        self.min_stop
    }

    pub fn max_stop(&self) -> f64 {
        self.max_stop
    }

    pub fn boarding_rate(&self) -> f64 {
        self.boarding_rate
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn accel_penalty(&self) -> bool {
        self.accel_penalty
    }

    /// Safety headway behind a departure of `train` (1-based) at station `i`.
    pub fn headway(&self, station: usize, train: usize) -> f64 {
        *self
            .headway_overrides
            .get(&(station, train))
            .unwrap_or(&self.headways[station - 1])
    }

    pub fn base_headways(&self) -> &[f64] {
        &self.headways
    }

    pub fn headway_overrides(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.headway_overrides.iter().map(|(&(s, k), &v)| (s, k, v))
    }

    pub fn set_headway_override(&mut self, station: usize, train: usize, value: f64) -> Result<()> {
        if station < 1 || station > self.n_stations() {
            return Err(Error::invalid("headway override station out of range"));
        }
        if !value.is_finite() || value < 0.0 {
            return Err(Error::invalid("headway override must be nonnegative"));
        }
        self.headway_overrides.insert((station, train), value);
        Ok(())
    }

    /// Distance from station 1 to station `i`, km.
    pub fn cumulative_distance(&self, station: usize) -> f64 {
        self.segments[..station - 1].iter().map(|s| s.length_km).sum()
    }

    /// Travel time over the segment leaving `station` at the given pace,
    /// including acceleration losses when the train stops downstream.
    pub fn travel_time(&self, station: usize, unit_time: f64, stops_downstream: bool) -> f64 {
        let seg = self.segment(station);
        let mut t = seg.length_km * unit_time;
        if self.accel_penalty && stops_downstream {
            t += seg.accel_time + seg.decel_time;
        }
        t
    }
}

/// Rolling stock assigned to one train run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub carriages: u32,
    pub capacity_per_carriage: f64,
}

impl TrainConfig {
    pub fn new(carriages: u32, capacity_per_carriage: f64) -> Result<Self> {
        if !capacity_per_carriage.is_finite() || capacity_per_carriage <= 0.0 {
            return Err(Error::invalid("carriage capacity must be positive"));
        }
        Ok(TrainConfig {
            carriages,
            capacity_per_carriage,
        })
    }

    pub fn capacity(&self) -> f64 {
        self.carriages as f64 * self.capacity_per_carriage
    }
}

/// One train run: activation, stop pattern, times, pace, stock.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSchedule {
    pub active: bool,
    /// Stop decision per station.
    pub stops: Vec<bool>,
    /// Departure time per station, minutes.
    pub departures: Vec<f64>,
    /// Dwell per station, minutes. Zero where the train passes through.
    pub stop_times: Vec<f64>,
    /// Pace per segment, minutes per km.
    pub unit_times: Vec<f64>,
    pub config: TrainConfig,
}

impl TrainSchedule {
    /// Active run stopping everywhere, dwells at the lower bound, pace at
    /// the fastest allowed. A convenient starting shape for search.
    pub fn full_stopper(line: &Line, config: TrainConfig, origin_departure: f64) -> TrainSchedule {
        let s = line.n_stations();
        let mut schedule = TrainSchedule {
            active: true,
            stops: vec![true; s],
            departures: vec![0.0; s],
            stop_times: vec![line.min_stop(); s],
            unit_times: line.segments().iter().map(|sg| sg.unit_time_min).collect(),
            config,
        };
        schedule.departures[0] = origin_departure;
        schedule.propagate(line);
        schedule
    }

    /// Inactive run parked past the horizon. It serves nobody, so it
    /// carries no stops and no dwell.
    pub fn parked(line: &Line, config: TrainConfig, slot: usize) -> TrainSchedule {
        let s = line.n_stations();
        let mut schedule = TrainSchedule {
            active: false,
            stops: vec![false; s],
            departures: vec![0.0; s],
            stop_times: vec![0.0; s],
            unit_times: line.segments().iter().map(|sg| sg.unit_time_min).collect(),
            config,
        };
        let park = 2.0 * line.horizon() + (slot as f64 + 1.0).min(line.horizon() * 0.9);
        schedule.departures[0] = park;
        schedule.propagate(line);
        schedule
    }

    /// Recompute departures at stations 2..=S from the origin departure,
    /// dwells, and pace.
    pub fn propagate(&mut self, line: &Line) {
        for i in 1..self.departures.len() {
            let travel = line.travel_time(i, self.unit_times[i - 1], self.stops[i]);
            self.departures[i] = self.departures[i - 1] + travel + self.stop_times[i];
        }
    }

    pub fn origin_departure(&self) -> f64 {
        self.departures[0]
    }

    /// Arrival time at a station: departure minus dwell.
    pub fn arrival(&self, station: usize) -> f64 {
        self.departures[station - 1] - self.stop_times[station - 1]
    }

    pub fn capacity(&self) -> f64 {
        self.config.capacity()
    }

    pub fn total_stop_time(&self) -> f64 {
        self.stop_times.iter().sum()
    }
}

/// Full timetable over a fixed train fleet.
#[derive(Debug, Clone, PartialEq)]
pub struct Timetable {
    n_stations: usize,
    pub trains: Vec<TrainSchedule>,
}

impl Timetable {
    pub fn new(n_stations: usize, trains: Vec<TrainSchedule>) -> Result<Self> {
        if n_stations < 2 {
            return Err(Error::invalid("a timetable needs at least two stations"));
        }
        for (k, train) in trains.iter().enumerate() {
            if train.stops.len() != n_stations
                || train.departures.len() != n_stations
                || train.stop_times.len() != n_stations
                || train.unit_times.len() != n_stations - 1
            {
                return Err(Error::invalid(format!(
                    "train {} has fields sized for a different station count",
                    k + 1
                )));
            }
            let finite = train
                .departures
                .iter()
                .chain(train.stop_times.iter())
                .chain(train.unit_times.iter())
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::invalid(format!(
                    "train {} has non-finite times",
                    k + 1
                )));
            }
        }
        Ok(Timetable { n_stations, trains })
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    pub fn n_trains(&self) -> usize {
        self.trains.len()
    }

    pub fn n_active(&self) -> usize {
        self.trains.iter().filter(|t| t.active).count()
    }

    /// Indices of active trains in storage order.
    pub fn active_indices(&self) -> Vec<usize> {
        self.trains
            .iter()
            .enumerate()
            .filter(|(_, t)| t.active)
            .map(|(k, _)| k)
            .collect()
    }

    /// Origin departures of active trains in storage order.
    pub fn active_origin_departures(&self) -> Vec<f64> {
        self.trains
            .iter()
            .filter(|t| t.active)
            .map(|t| t.origin_departure())
            .collect()
    }

    /// Differences between consecutive active origin departures.
    ///
    /// Empty when fewer than two trains run.
    pub fn interdeparture_times(&self) -> Vec<f64> {
        let deps = self.active_origin_departures();
        deps.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Gaps between consecutive active departures at a station, with the
    /// span before the first train measured from time zero.
    pub fn departure_gaps(&self, station: usize) -> Vec<f64> {
        let mut gaps = Vec::new();
        let mut prev = 0.0;
        for t in self.trains.iter().filter(|t| t.active) {
            let d = t.departures[station - 1];
            gaps.push(d - prev);
            prev = d;
        }
        gaps
    }

    pub fn total_stop_minutes(&self) -> f64 {
        self.trains
            .iter()
            .filter(|t| t.active)
            .map(|t| t.total_stop_time())
            .sum()
    }

    /// Recompute all downstream departures.
    pub fn propagate(&mut self, line: &Line) {
        for train in &mut self.trains {
            train.propagate(line);
        }
    }
}

/// Rules a timetable can break.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Departure at a station disagrees with the propagation rule.
    Propagation,
    /// A train arrives before its leader's departure plus the safety gap.
    Headway,
    /// Dwell outside the allowed band, or nonzero at a passed station.
    StopBounds,
    /// First or last station not served by an active train.
    TerminalStops,
    /// An inactive train precedes an active one.
    ActivationOrder,
    /// Origin departure outside the window for its activation state.
    ActivationWindow,
    /// Pace outside the segment's allowed band.
    PaceBounds,
}

impl ConstraintKind {
    pub fn label(&self) -> &'static str {
        match self {
            ConstraintKind::Propagation => "propagation",
            ConstraintKind::Headway => "headway",
            ConstraintKind::StopBounds => "stop-bounds",
            ConstraintKind::TerminalStops => "terminal-stops",
            ConstraintKind::ActivationOrder => "activation-order",
            ConstraintKind::ActivationWindow => "activation-window",
            ConstraintKind::PaceBounds => "pace-bounds",
        }
    }
}

/// One broken rule. Train and station are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub train: usize,
    pub station: Option<usize>,
    /// How far past the rule the value lies, in the rule's own unit.
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every timetable rule against the line. Only reports breaches
/// beyond the numerical slack; a feasible report means the timetable can
/// be operated as written.
pub fn validate(timetable: &Timetable, line: &Line) -> Result<ValidationReport> {
    if timetable.n_stations() != line.n_stations() {
        return Err(Error::invalid(format!(
            "timetable is for {} stations, line has {}",
            timetable.n_stations(),
            line.n_stations()
        )));
    }
    let s = line.n_stations();
    let horizon = line.horizon();
    let mut violations = Vec::new();
    let mut push = |kind, train: usize, station: Option<usize>, magnitude: f64| {
        if magnitude > FEASIBILITY_TOL {
            violations.push(Violation {
                kind,
                train: train + 1,
                station,
                magnitude,
            });
        }
    };

    let mut seen_inactive = false;
    for (k, train) in timetable.trains.iter().enumerate() {
        if train.active && seen_inactive {
            push(ConstraintKind::ActivationOrder, k, None, 1.0);
        }
        seen_inactive |= !train.active;

        // Pace band.
        for i in 1..s {
            let seg = line.segment(i);
            let u = train.unit_times[i - 1];
            let low = seg.unit_time_min - u;
            let high = u - seg.unit_time_max;
            push(ConstraintKind::PaceBounds, k, Some(i), low.max(high));
        }

        // Dwell band, scaled by the stop decision.
        for i in 1..=s {
            let dwell = train.stop_times[i - 1];
            let (lo, hi) = if train.stops[i - 1] {
                (line.min_stop(), line.max_stop())
            } else {
                (0.0, 0.0)
            };
            push(ConstraintKind::StopBounds, k, Some(i), (lo - dwell).max(dwell - hi));
        }

        // Departure chain.
        for i in 1..s {
            let travel = line.travel_time(i, train.unit_times[i - 1], train.stops[i]);
            let expected = train.departures[i - 1] + travel + train.stop_times[i];
            push(
                ConstraintKind::Propagation,
                k,
                Some(i + 1),
                (train.departures[i] - expected).abs(),
            );
        }

        if train.active {
            if !train.stops[0] {
                push(ConstraintKind::TerminalStops, k, Some(1), 1.0);
            }
            if !train.stops[s - 1] {
                push(ConstraintKind::TerminalStops, k, Some(s), 1.0);
            }
            let t1 = train.origin_departure();
            push(
                ConstraintKind::ActivationWindow,
                k,
                Some(1),
                (0.0 - t1).max(t1 - horizon),
            );
        } else {
            let t1 = train.origin_departure();
            push(
                ConstraintKind::ActivationWindow,
                k,
                Some(1),
                (2.0 * horizon - t1).max(t1 - 3.0 * horizon),
            );
        }
    }

    // Safety separation between consecutive active trains.
    let active = timetable.active_indices();
    for w in active.windows(2) {
        let (ka, kb) = (w[0], w[1]);
        let leader = &timetable.trains[ka];
        let follower = &timetable.trains[kb];
        for i in 1..=s {
            let gap = line.headway(i, ka + 1);
            let arrival = follower.departures[i - 1] - follower.stop_times[i - 1];
            let needed = leader.departures[i - 1] + gap;
            push(ConstraintKind::Headway, kb, Some(i), needed - arrival);
        }
    }

    Ok(ValidationReport { violations })
}

/// Smallest fleet able to move the heaviest cut of the demand over the
/// horizon, assuming every train runs with the minimum stock.
pub fn train_count_upper_bound(od: &OdMatrix, horizon: f64, min_train_capacity: f64) -> Result<usize> {
    if !min_train_capacity.is_finite() || min_train_capacity <= 0.0 {
        return Err(Error::invalid("minimum train capacity must be positive"));
    }
    let cut = od.max_cut_demand(0.0, horizon);
    let ratio = cut / min_train_capacity;
    // Shave numerical fuzz so an exact multiple does not round up.
    Ok((ratio - 1e-9).ceil().max(0.0) as usize)
}
