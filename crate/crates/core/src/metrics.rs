//! Quality and profitability measures for an evaluated timetable.
//!
//! Occupancy-based factors compare passengers on board with offered
//! seats: the load factor weighs occupancy by segment length, the
//! vertical factor looks at the worst segment, and the horizontal factor
//! measures how evenly the worst segment's crowd spreads along the line.
//! The served-demand ratio compares boardings against fresh arrivals and
//! can exceed one when a train also absorbs backlog left by its
//! predecessors.

use crate::error::{Error, Result};
use crate::flow::{AwtBreakdown, FlowState, TrainFlow};
use crate::line::Line;

/// Per-train measures. Fractions unless noted.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainMetrics {
    /// Which timetable train this row describes.
    pub train_index: usize,
    /// Length-weighted average occupancy over capacity.
    pub load_factor: f64,
    /// Peak occupancy over capacity.
    pub vertical_load_factor: f64,
    /// Average-to-peak occupancy ratio; zero with the degenerate flag for
    /// an empty train.
    pub horizontal_load_factor: f64,
    /// Boardings over fresh arrivals. May exceed one on backlog.
    pub served_demand: f64,
    /// Peak on-board count, passengers.
    pub peak_occupancy: f64,
    /// Length-weighted average on-board count, passengers.
    pub average_occupancy: f64,
    /// Empty train: the average-to-peak ratio had no peak to divide by.
    pub empty_train: bool,
    /// Nobody newly arrived for this train; served demand reported as one.
    pub no_arrivals: bool,
    /// Served demand above one: the train absorbed earlier backlog.
    pub absorbed_backlog: bool,
}

/// Aggregates over the active trains, percentages for the report columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TimetableMetrics {
    pub trains: Vec<TrainMetrics>,
    /// Mean served demand, percent.
    pub asd: f64,
    /// Mean load factor, percent.
    pub alf: f64,
    /// Mean vertical load factor, percent.
    pub avlf: f64,
    /// Mean horizontal load factor, percent.
    pub ahlf: f64,
    /// Average waiting, minutes.
    pub awt: f64,
    /// Mean origin interdeparture gap; absent with fewer than two trains.
    pub interdeparture_mean: Option<f64>,
    /// Population variance of the gaps; absent with fewer than two trains.
    pub interdeparture_var: Option<f64>,
    /// Waiting a randomly arriving passenger would expect from the gap
    /// distribution alone, assuming seats never run out.
    pub random_incidence_wait: Option<f64>,
    /// How far actual waiting exceeds that prediction; positive means
    /// capacity made people over-wait.
    pub over_waiting: Option<f64>,
}

fn occupancy_profile(train: &TrainFlow, line: &Line) -> (f64, f64) {
    let mut peak = 0.0f64;
    let mut weighted = 0.0;
    let mut total_len = 0.0;
    for i in 1..line.n_stations() {
        let on_board = train.onboard_after(i);
        let len = line.segment(i).length_km;
        peak = peak.max(on_board);
        weighted += on_board * len;
        total_len += len;
    }
    (peak, weighted / total_len)
}

/// Measures for one train of an evaluated flow.
pub fn train_metrics(train: &TrainFlow, line: &Line) -> Result<TrainMetrics> {
    if train.capacity <= 0.0 {
        return Err(Error::invalid("load factors need positive capacity"));
    }
    let (peak, average) = occupancy_profile(train, line);
    let vertical = peak / train.capacity;
    let load = average / train.capacity;
    let empty_train = peak <= 0.0;
    let horizontal = if empty_train { 0.0 } else { average / peak };

    let arrived: f64 = train.arrived.iter().sum();
    let boarded: f64 = train.boarded.iter().sum();
    let no_arrivals = arrived <= 0.0;
    let served = if no_arrivals { 1.0 } else { boarded / arrived };

    Ok(TrainMetrics {
        train_index: train.train_index,
        load_factor: load,
        vertical_load_factor: vertical,
        horizontal_load_factor: horizontal,
        served_demand: served,
        peak_occupancy: peak,
        average_occupancy: average,
        empty_train,
        no_arrivals,
        absorbed_backlog: served > 1.0,
    })
}

/// Expected wait of a passenger arriving at a uniformly random time, from
/// the gap distribution alone: half the mean gap plus a penalty for gap
/// variability. Variance is over the full population of gaps.
pub fn random_incidence_wait(gaps: &[f64]) -> Result<f64> {
    if gaps.is_empty() {
        return Err(Error::invalid("no interdeparture gaps"));
    }
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(Error::invalid("interdeparture mean must be positive"));
    }
    let var = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / n;
    Ok(var / (2.0 * mean) + mean / 2.0)
}

/// Aggregate an evaluated timetable into report measures.
pub fn summarize(
    flow: &FlowState,
    line: &Line,
    awt: &AwtBreakdown,
    origin_interdepartures: &[f64],
) -> Result<TimetableMetrics> {
    if flow.trains.is_empty() {
        return Err(Error::invalid("metrics need at least one active train"));
    }
    let trains: Vec<TrainMetrics> = flow
        .trains
        .iter()
        .map(|t| train_metrics(t, line))
        .collect::<Result<_>>()?;
    let n = trains.len() as f64;
    let mean = |f: fn(&TrainMetrics) -> f64| trains.iter().map(f).sum::<f64>() / n * 100.0;

    let (interdeparture_mean, interdeparture_var, rit, over) =
        if origin_interdepartures.is_empty() {
            (None, None, None, None)
        } else {
            let m = origin_interdepartures.iter().sum::<f64>()
                / origin_interdepartures.len() as f64;
            let v = origin_interdepartures
                .iter()
                .map(|g| (g - m) * (g - m))
                .sum::<f64>()
                / origin_interdepartures.len() as f64;
            let rit = random_incidence_wait(origin_interdepartures).ok();
            let over = rit.map(|r| awt.total_awt - r);
            (Some(m), Some(v), rit, over)
        };

    Ok(TimetableMetrics {
        asd: mean(|t| t.served_demand),
        alf: mean(|t| t.load_factor),
        avlf: mean(|t| t.vertical_load_factor),
        ahlf: mean(|t| t.horizontal_load_factor),
        awt: awt.total_awt,
        interdeparture_mean,
        interdeparture_var,
        random_incidence_wait: rit,
        over_waiting: over,
        trains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn train_with_occupancy(occupancy: &[f64], cap: f64) -> (TrainFlow, Line) {
        use crate::line::Segment;
        let n = occupancy.len() + 1;
        let line = Line::new(
            vec![Segment::new(2.0, 1.0, 2.0, 0.0, 0.0).unwrap(); n - 1],
            vec![1.0; n],
            0.3,
            2.0,
            0.0,
            100.0,
            false,
        )
        .unwrap();
        let mut free: Vec<f64> = occupancy.iter().map(|o| cap - o).collect();
        free.push(cap);
        let train = TrainFlow {
            train_index: 0,
            capacity: cap,
            departures: vec![0.0; n],
            stop_times: vec![0.0; n],
            stops: vec![true; n],
            arrived: vec![],
            new_boarded: vec![],
            new_left: vec![],
            waiting: vec![],
            waiting_boarded: vec![],
            waiting_left: vec![],
            boarded: vec![],
            arrived_by_origin: vec![0.0; n],
            arrived_by_destination: vec![0.0; n],
            waiting_by_origin: vec![0.0; n],
            waiting_by_destination: vec![0.0; n],
            boarded_by_origin: vec![0.0; n],
            alighted_by_destination: vec![0.0; n],
            free_capacity: free,
        };
        (train, line)
    }

    #[test]
    fn load_factors_on_two_segments() {
        let (train, line) = train_with_occupancy(&[40.0, 20.0], 40.0);
        let m = train_metrics(&train, &line).unwrap();
        assert_relative_eq!(m.load_factor, 0.75, epsilon = 1e-12);
        assert_relative_eq!(m.vertical_load_factor, 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.horizontal_load_factor, 0.75, epsilon = 1e-12);
        assert_relative_eq!(
            m.load_factor,
            m.vertical_load_factor * m.horizontal_load_factor,
            epsilon = 1e-9
        );
        assert!(!m.empty_train);
    }

    #[test]
    fn half_full_peak() {
        let (train, line) = train_with_occupancy(&[10.0, 20.0], 40.0);
        let m = train_metrics(&train, &line).unwrap();
        assert_relative_eq!(m.vertical_load_factor, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn empty_train_is_flagged() {
        let (train, line) = train_with_occupancy(&[0.0, 0.0], 40.0);
        let m = train_metrics(&train, &line).unwrap();
        assert_eq!(m.load_factor, 0.0);
        assert_eq!(m.horizontal_load_factor, 0.0);
        assert!(m.empty_train);
    }

    #[test]
    fn served_demand_can_exceed_one() {
        let (mut train, line) = train_with_occupancy(&[40.0], 40.0);
        train.arrived = vec![10.0];
        train.boarded = vec![40.0];
        let m = train_metrics(&train, &line).unwrap();
        assert_relative_eq!(m.served_demand, 4.0, epsilon = 1e-12);
        assert!(m.absorbed_backlog);
    }

    #[test]
    fn random_incidence_reference_values() {
        assert_relative_eq!(
            random_incidence_wait(&[10.0; 6]).unwrap(),
            5.0,
            epsilon = 1e-12
        );
        // Mean 20, population variance 100: 100/40 + 10.
        assert_relative_eq!(
            random_incidence_wait(&[10.0, 30.0]).unwrap(),
            12.5,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            random_incidence_wait(&[14.0]).unwrap(),
            7.0,
            epsilon = 1e-12
        );
        assert!(random_incidence_wait(&[]).is_err());
        assert!(random_incidence_wait(&[0.0, 0.0]).is_err());
    }
}
