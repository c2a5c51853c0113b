//! Passenger flow over a fixed timetable.
//!
//! Given demand curves and a timetable, this module works out who arrives
//! between consecutive trains, who boards, who is left waiting, and how
//! much capacity each train has left, station by station. The allocation
//! is deterministic: trains are processed in departure order; at each stop
//! alighting frees seats first, then passengers already waiting board
//! before newly arrived ones, and when seats run short a priority class is
//! rationed proportionally to its per-destination counts.
//!
//! Dwell times and departures depend on each other: dwell bounds grow with
//! boarding demand, departures shift with dwells, and shifted departures
//! change who arrives in each window. `evaluate_fixed_point` iterates that
//! loop to a fixed point and returns the settled timetable with its flow.

use crate::demand::OdMatrix;
use crate::error::{Error, Result};
use crate::line::{Line, Timetable};

/// Slack for clamping tiny negative seat counts born from summation
/// rounding.
const SEAT_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    /// Treat passengers as indivisible. Rationing then uses
    /// largest-remainder rounding, ties broken by nearer destination.
    /// Meant for instances whose window masses are exact integers.
    pub integer_passengers: bool,
    /// Fixed-point stop: largest dwell change between rounds, minutes.
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            integer_passengers: false,
            fixed_point_tol: 1e-6,
            fixed_point_max_iter: 20,
        }
    }
}

/// The forward station pairs that carry demand, in lexicographic order.
/// Tensors over pairs are stored flat in this order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    n_stations: usize,
    pairs: Vec<(usize, usize)>,
    lookup: Vec<Option<usize>>,
}

impl PairSet {
    pub fn from_od(od: &OdMatrix) -> PairSet {
        let s = od.n_stations();
        let pairs: Vec<(usize, usize)> = od.pairs().map(|(i, j, _)| (i, j)).collect();
        let mut lookup = vec![None; s * s];
        for (idx, &(i, j)) in pairs.iter().enumerate() {
            lookup[(i - 1) * s + (j - 1)] = Some(idx);
        }
        PairSet {
            n_stations: s,
            pairs,
            lookup,
        }
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Flat tensor position of pair (origin, destination), if it carries
    /// demand.
    pub fn index(&self, origin: usize, destination: usize) -> Option<usize> {
        self.lookup[(origin - 1) * self.n_stations + (destination - 1)]
    }
}

/// Flow tensors for one active train. Pair-indexed vectors follow the
/// `PairSet` order; station-indexed vectors are 0-based over stations.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainFlow {
    /// Index of this train in the timetable.
    pub train_index: usize,
    pub capacity: f64,
    /// Departure per station when this flow was computed.
    pub departures: Vec<f64>,
    /// Dwell per station when this flow was computed.
    pub stop_times: Vec<f64>,
    pub stops: Vec<bool>,

    /// Passengers arriving at the origin platform since the previous train
    /// left, per pair.
    pub arrived: Vec<f64>,
    /// Fresh arrivals that got aboard, per pair.
    pub new_boarded: Vec<f64>,
    /// Fresh arrivals left on the platform, per pair.
    pub new_left: Vec<f64>,
    /// Passengers already waiting when this train arrived, per pair.
    pub waiting: Vec<f64>,
    /// Waiting passengers that got aboard, per pair.
    pub waiting_boarded: Vec<f64>,
    /// Waiting passengers left again, per pair.
    pub waiting_left: Vec<f64>,
    /// Everyone who boarded, per pair.
    pub boarded: Vec<f64>,

    /// Station sums of `arrived` over destinations.
    pub arrived_by_origin: Vec<f64>,
    /// Station sums of `arrived` over origins.
    pub arrived_by_destination: Vec<f64>,
    /// Station sums of `waiting` over destinations.
    pub waiting_by_origin: Vec<f64>,
    /// Station sums of `waiting` over origins.
    pub waiting_by_destination: Vec<f64>,
    /// Station sums of `boarded` over destinations.
    pub boarded_by_origin: Vec<f64>,
    /// Passengers stepping off at each station.
    pub alighted_by_destination: Vec<f64>,
    /// Seats free when leaving each station.
    pub free_capacity: Vec<f64>,
}

impl TrainFlow {
    /// Passengers on board over the segment leaving `station`.
    pub fn onboard_after(&self, station: usize) -> f64 {
        self.capacity - self.free_capacity[station - 1]
    }
}

/// Complete passenger flow for a timetable.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub pairs: PairSet,
    /// Active trains in departure order.
    pub trains: Vec<TrainFlow>,
    /// Passengers still waiting after the last train, per pair.
    pub leftover: Vec<f64>,
    /// Whether the dwell/departure loop settled (always true for a plain
    /// single-pass load).
    pub converged: bool,
    /// Rounds taken by the dwell/departure loop.
    pub iterations: usize,
}

impl FlowState {
    pub fn total_arrived(&self) -> f64 {
        self.trains
            .iter()
            .map(|t| t.arrived.iter().sum::<f64>())
            .sum()
    }

    pub fn total_boarded(&self) -> f64 {
        self.trains
            .iter()
            .map(|t| t.boarded.iter().sum::<f64>())
            .sum()
    }

    pub fn total_leftover(&self) -> f64 {
        self.leftover.iter().sum()
    }
}

/// Per-pair window masses for each active train: passengers reaching the
/// origin platform after the previous train's departure and up to this
/// train's. The window before the first train opens at time zero.
///
/// Fails when active departures are not in order at some station, which
/// would make a window negative.
pub fn arrivals_between_trains(od: &OdMatrix, tt: &Timetable) -> Result<Vec<Vec<f64>>> {
    let pairs = PairSet::from_od(od);
    let active = tt.active_indices();
    check_station_order(tt, &active)?;
    let mut out = Vec::with_capacity(active.len());
    let mut prev: Vec<f64> = vec![0.0; tt.n_stations()];
    for &k in &active {
        let train = &tt.trains[k];
        let mut row = vec![0.0; pairs.len()];
        for (idx, &(i, j)) in pairs.pairs().iter().enumerate() {
            let a = prev[i - 1];
            let b = train.departures[i - 1];
            row[idx] = od.get(i, j).expect("pair set from od").interval(a, b);
        }
        prev.copy_from_slice(&train.departures);
        out.push(row);
    }
    Ok(out)
}

fn check_station_order(tt: &Timetable, active: &[usize]) -> Result<()> {
    for w in active.windows(2) {
        for i in 0..tt.n_stations() {
            let a = tt.trains[w[0]].departures[i];
            let b = tt.trains[w[1]].departures[i];
            if b < a {
                return Err(Error::invalid(format!(
                    "active trains out of order at station {}: {} departs before its leader",
                    i + 1,
                    w[1] + 1
                )));
            }
        }
    }
    Ok(())
}

/// Ration `available` seats over the per-destination pools selected by
/// `eligible`, proportionally to pool size. Returns the per-destination
/// grants aligned with `pool`. In integer mode the grants are integers by
/// largest-remainder rounding with ties to the nearer destination.
fn ration(pool: &[f64], eligible: &[bool], available: f64, integer: bool) -> Vec<f64> {
    let total: f64 = pool
        .iter()
        .zip(eligible)
        .filter(|(_, &e)| e)
        .map(|(&p, _)| p)
        .sum();
    let mut grant = vec![0.0; pool.len()];
    if total <= 0.0 || available <= 0.0 {
        return grant;
    }
    if total <= available {
        for (g, (&p, &e)) in grant.iter_mut().zip(pool.iter().zip(eligible)) {
            if e {
                *g = p;
            }
        }
        return grant;
    }
    let ratio = available / total;
    if !integer {
        for (g, (&p, &e)) in grant.iter_mut().zip(pool.iter().zip(eligible)) {
            if e {
                *g = p * ratio;
            }
        }
        return grant;
    }
    // Integer pools, integer seats: floor the proportional shares, then
    // hand out the remaining units by largest fractional remainder.
    let mut remainders: Vec<(usize, f64)> = Vec::new();
    let mut used = 0.0;
    for (idx, (&p, &e)) in pool.iter().zip(eligible).enumerate() {
        if !e || p <= 0.0 {
            continue;
        }
        let share = p * ratio;
        let base = share.floor();
        grant[idx] = base;
        used += base;
        remainders.push((idx, share - base));
    }
    let mut leftover_units = available - used;
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for (idx, _) in remainders {
        if leftover_units < 1.0 {
            break;
        }
        grant[idx] += 1.0;
        leftover_units -= 1.0;
    }
    grant
}

/// Run the allocation over every active train with the timetable's dwell
/// times taken as given.
pub fn load_passengers(
    od: &OdMatrix,
    tt: &Timetable,
    line: &Line,
    opts: &FlowOptions,
) -> Result<FlowState> {
    if od.n_stations() != tt.n_stations() {
        return Err(Error::invalid(format!(
            "demand is for {} stations, timetable for {}",
            od.n_stations(),
            tt.n_stations()
        )));
    }
    if tt.n_stations() != line.n_stations() {
        return Err(Error::invalid(format!(
            "timetable is for {} stations, line has {}",
            tt.n_stations(),
            line.n_stations()
        )));
    }
    let s = tt.n_stations();
    let pairs = PairSet::from_od(od);
    let n_pairs = pairs.len();
    let window_masses = arrivals_between_trains(od, tt)?;

    // Waiting pool per pair, updated train by train. The update below
    // keeps one canonical association, waiting += (arrived - boarded),
    // so that re-folding the stored tensors reproduces the leftover bit
    // for bit.
    let mut waiting_pool = vec![0.0f64; n_pairs];
    let mut trains = Vec::with_capacity(tt.n_active());

    for (order, &k) in tt.active_indices().iter().enumerate() {
        let train = &tt.trains[k];
        let cap = train.capacity();
        let arrived = window_masses[order].clone();
        let waiting = waiting_pool.clone();

        let mut flow = TrainFlow {
            train_index: k,
            capacity: cap,
            departures: train.departures.clone(),
            stop_times: train.stop_times.clone(),
            stops: train.stops.clone(),
            arrived,
            new_boarded: vec![0.0; n_pairs],
            new_left: vec![0.0; n_pairs],
            waiting,
            waiting_boarded: vec![0.0; n_pairs],
            waiting_left: vec![0.0; n_pairs],
            boarded: vec![0.0; n_pairs],
            arrived_by_origin: vec![0.0; s],
            arrived_by_destination: vec![0.0; s],
            waiting_by_origin: vec![0.0; s],
            waiting_by_destination: vec![0.0; s],
            boarded_by_origin: vec![0.0; s],
            alighted_by_destination: vec![0.0; s],
            free_capacity: vec![0.0; s],
        };

        // Seats occupied per destination station, 0-based.
        let mut onboard = vec![0.0f64; s];
        let mut fs_prev = cap;

        for i in 1..=s {
            let alighting = onboard[i - 1];
            onboard[i - 1] = 0.0;
            flow.alighted_by_destination[i - 1] = alighting;
            let free = if i == 1 { cap } else { fs_prev + alighting };

            let boarding_allowed = train.stops[i - 1] && i < s;
            let mut boarded_here = 0.0;
            if boarding_allowed {
                // Destination pools for this origin, aligned by station.
                let mut waiting_pool_by_dest = vec![0.0; s];
                let mut new_pool_by_dest = vec![0.0; s];
                let mut eligible = vec![false; s];
                for j in (i + 1)..=s {
                    if let Some(idx) = pairs.index(i, j) {
                        waiting_pool_by_dest[j - 1] = flow.waiting[idx];
                        new_pool_by_dest[j - 1] = flow.arrived[idx];
                        // A passenger only boards a train that will stop at
                        // their destination.
                        eligible[j - 1] = train.stops[j - 1];
                    }
                }
                let waiting_grant = ration(
                    &waiting_pool_by_dest,
                    &eligible,
                    free,
                    opts.integer_passengers,
                );
                let waiting_total: f64 = waiting_grant.iter().sum();
                let new_grant = ration(
                    &new_pool_by_dest,
                    &eligible,
                    free - waiting_total,
                    opts.integer_passengers,
                );
                for j in (i + 1)..=s {
                    let idx = match pairs.index(i, j) {
                        Some(idx) => idx,
                        None => continue,
                    };
                    let es = waiting_grant[j - 1];
                    let ns = new_grant[j - 1];
                    if es == 0.0 && ns == 0.0 {
                        continue;
                    }
                    flow.waiting_boarded[idx] = es;
                    flow.new_boarded[idx] = ns;
                    let total = es + ns;
                    flow.boarded[idx] = total;
                    onboard[j - 1] += total;
                    boarded_here += total;
                }
            }
            flow.boarded_by_origin[i - 1] = boarded_here;

            // Seat balance: start from full capacity, then free seats carry
            // over plus alighting minus boarding.
            let mut fs = if i == 1 {
                cap - boarded_here
            } else {
                fs_prev + alighting - boarded_here
            };
            if fs < 0.0 && fs > -SEAT_SNAP {
                fs = 0.0;
            }
            if fs > cap && fs < cap + SEAT_SNAP {
                fs = cap;
            }
            if !(0.0..=cap).contains(&fs) {
                return Err(Error::invalid(format!(
                    "seat balance escaped [0, capacity] at station {i}: {fs}"
                )));
            }
            flow.free_capacity[i - 1] = fs;
            fs_prev = fs;
        }

        // Complements and waiting-pool update per pair.
        for idx in 0..n_pairs {
            flow.new_left[idx] = flow.arrived[idx] - flow.new_boarded[idx];
            flow.waiting_left[idx] = flow.waiting[idx] - flow.waiting_boarded[idx];
            waiting_pool[idx] += flow.arrived[idx] - flow.boarded[idx];
            if waiting_pool[idx] < 0.0 && waiting_pool[idx] > -SEAT_SNAP {
                waiting_pool[idx] = 0.0;
            }
        }

        // Station aggregates, accumulated pair by pair.
        for (idx, &(i, j)) in pairs.pairs().iter().enumerate() {
            flow.arrived_by_origin[i - 1] += flow.arrived[idx];
            flow.arrived_by_destination[j - 1] += flow.arrived[idx];
            flow.waiting_by_origin[i - 1] += flow.waiting[idx];
            flow.waiting_by_destination[j - 1] += flow.waiting[idx];
        }

        trains.push(flow);
    }

    Ok(FlowState {
        pairs,
        trains,
        leftover: waiting_pool,
        converged: true,
        iterations: 1,
    })
}

/// Dwell each train needs at each station under the boarding-time rule:
/// the base dwell plus boarding time, capped by the seats available on
/// arrival and by the dwell ceiling. Zero where the train passes through.
pub fn realized_stop_times(flow: &FlowState, line: &Line) -> Vec<Vec<f64>> {
    let s = line.n_stations();
    let g = line.boarding_rate();
    flow.trains
        .iter()
        .map(|train| {
            let mut dwell = vec![0.0; s];
            for i in 1..=s {
                if !train.stops[i - 1] {
                    continue;
                }
                // Seats that could be filled: all of them at the first
                // station, whatever arrives free elsewhere.
                let fillable = if i == 1 {
                    train.capacity
                } else {
                    train.free_capacity[i - 2]
                };
                let by_seats = line.min_stop() + g * fillable;
                let by_boarding = line.min_stop() + g * train.boarded_by_origin[i - 1];
                let dwell_i = by_seats.min(by_boarding).min(line.max_stop());
                dwell[i - 1] = dwell_i.max(line.min_stop());
            }
            dwell
        })
        .collect()
}

/// Load passengers and settle the dwell/departure loop: allocate with the
/// current dwells, recompute the dwell each stop needs, re-propagate
/// departures, and repeat until dwells move less than the tolerance.
/// Returns the settled timetable together with its flow.
pub fn evaluate_fixed_point(
    od: &OdMatrix,
    tt: &Timetable,
    line: &Line,
    opts: &FlowOptions,
) -> Result<(Timetable, FlowState)> {
    let mut current = tt.clone();
    current.propagate(line);
    let mut settled_flow: Option<FlowState> = None;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.fixed_point_max_iter {
        iterations += 1;
        let flow = load_passengers(od, &current, line, opts)?;
        let dwells = realized_stop_times(&flow, line);
        let mut shift = 0.0f64;
        for (train_dwells, &k) in dwells.iter().zip(current.active_indices().iter()) {
            for (i, &d) in train_dwells.iter().enumerate() {
                shift = shift.max((current.trains[k].stop_times[i] - d).abs());
                current.trains[k].stop_times[i] = d;
            }
        }
        current.propagate(line);
        if shift == 0.0 {
            // Nothing moved: the flow already describes `current` exactly.
            settled_flow = Some(flow);
        }
        if shift < opts.fixed_point_tol {
            converged = true;
            break;
        }
    }

    let mut flow = match settled_flow {
        Some(f) => f,
        // Dwells moved on the last round (within tolerance or not), so the
        // flow has to be recomputed against the final departures.
        None => load_passengers(od, &current, line, opts)?,
    };
    flow.converged = converged;
    flow.iterations = iterations;
    Ok((current, flow))
}

/// Average waiting and its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct AwtBreakdown {
    /// Average wait per passenger, minutes.
    pub total_awt: f64,
    /// Passenger-minutes spent by those left over from earlier trains.
    pub waiting_component: f64,
    /// Passenger-minutes of fresh arrivals, at half a window each.
    pub arrival_component: f64,
    /// All passengers due over the horizon, the normalizer.
    pub total_demand: f64,
}

/// Average passenger waiting time over the horizon.
///
/// Passengers waiting from before wait the full gap between consecutive
/// departures; fresh arrivals wait half of it on average. The last station
/// is excluded, nobody boards there. The gap before the first train is
/// measured from time zero.
pub fn awt(flow: &FlowState, od: &OdMatrix, line: &Line) -> Result<AwtBreakdown> {
    let total_demand = od.total_over(0.0, line.horizon());
    if total_demand <= 0.0 {
        return Err(Error::invalid(
            "average waiting is undefined for zero total demand",
        ));
    }
    let s = line.n_stations();
    let mut waiting_component = 0.0;
    let mut arrival_component = 0.0;
    let mut prev = vec![0.0f64; s];
    for train in &flow.trains {
        for i in 1..s {
            let gap = train.departures[i - 1] - prev[i - 1];
            waiting_component += gap * train.waiting_by_origin[i - 1];
            arrival_component += 0.5 * gap * train.arrived_by_origin[i - 1];
        }
        prev.copy_from_slice(&train.departures);
    }
    Ok(AwtBreakdown {
        total_awt: (waiting_component + arrival_component) / total_demand,
        waiting_component,
        arrival_component,
        total_demand,
    })
}

/// Average waiting with the horizon end treated as one more boundary.
///
/// Extends [`awt`] by one virtual interval per origin station, from the
/// last departure there to the end of the horizon: passengers still on the
/// platform wait the full remaining gap, later arrivals half of it. This is
/// the planning objective; without it, stranding passengers after the last
/// train would be free and tight early packing would always win.
pub fn awt_to_horizon(flow: &FlowState, od: &OdMatrix, line: &Line) -> Result<AwtBreakdown> {
    let base = awt(flow, od, line)?;
    let s = line.n_stations();
    let horizon = line.horizon();
    let mut last = vec![0.0f64; s];
    if let Some(train) = flow.trains.last() {
        last.copy_from_slice(&train.departures);
    }
    let mut waiting_component = base.waiting_component;
    let mut arrival_component = base.arrival_component;
    for (idx, &(i, j)) in flow.pairs.pairs().iter().enumerate() {
        let gap = horizon - last[i - 1];
        if gap <= 0.0 {
            continue;
        }
        waiting_component += gap * flow.leftover[idx];
        arrival_component += 0.5 * gap * od.demand_between(i, j, last[i - 1], horizon);
    }
    Ok(AwtBreakdown {
        total_awt: (waiting_component + arrival_component) / base.total_demand,
        waiting_component,
        arrival_component,
        total_demand: base.total_demand,
    })
}
