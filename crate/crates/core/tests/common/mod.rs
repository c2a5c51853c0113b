//! Shared fixtures for the integration suites.
//!
//! Each test binary compiles this module separately and uses a subset,
//! so unused-item lints stay off.
//!
//! The centerpiece is a brute-force integer passenger simulator, written
//! against the allocation rules directly in exact i64 arithmetic. Demand
//! is a list of point bursts: a very steep logistic centered between two
//! integers is exactly 0 before and exactly 1 after in f64, so every
//! cumulative-count difference the library computes is an exact integer
//! and the two implementations must agree bit for bit.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use railsched_core::demand::{OdMatrix, SigmoidSum, SigmoidTerm};
use railsched_core::flow::{load_passengers, FlowOptions, FlowState};
use railsched_core::line::{Line, Segment, Timetable, TrainConfig, TrainSchedule};

pub const BURST_STEEPNESS: f64 = 4096.0;

/// `count` passengers arriving all at once between minute `minute` and
/// `minute + 1`.
pub fn burst(count: f64, minute: u32) -> SigmoidTerm {
    SigmoidTerm::new(count, BURST_STEEPNESS, minute as f64 + 0.5).unwrap()
}

/// One randomly generated exact-arithmetic loading instance.
pub struct OracleInstance {
    pub od: OdMatrix,
    pub timetable: Timetable,
    /// (origin, destination) -> bursts as (minute, passengers).
    pub masses: BTreeMap<(usize, usize), Vec<(u32, i64)>>,
    pub n_stations: usize,
}

pub fn generate_oracle_instance(seed: u64) -> OracleInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(seed));
    let n_stations = *[2usize, 3].choose(&mut rng).unwrap();
    let mut od = OdMatrix::new(n_stations).unwrap();
    let mut masses = BTreeMap::new();
    let mut any = false;
    for i in 1..n_stations {
        for j in (i + 1)..=n_stations {
            if rng.gen_bool(0.8) || (!any && (i, j) == (n_stations - 1, n_stations)) {
                let k = rng.gen_range(1..=3);
                let mut list = Vec::with_capacity(k);
                let mut terms = Vec::with_capacity(k);
                for _ in 0..k {
                    let minute = rng.gen_range(0..58u32);
                    let count = rng.gen_range(1..=3i64);
                    list.push((minute, count));
                    terms.push(burst(count as f64, minute));
                }
                od.set(i, j, SigmoidSum::new(terms)).unwrap();
                masses.insert((i, j), list);
                any = true;
            }
        }
    }

    let n_trains = rng.gen_range(1..=3usize);
    let mut trains = Vec::new();
    let mut origin = rng.gen_range(1..=20i64);
    for _ in 0..n_trains {
        let mut stops = vec![true; n_stations];
        for stop in stops.iter_mut().take(n_stations - 1).skip(1) {
            *stop = rng.gen_bool(0.7);
        }
        let carriages = rng.gen_range(1..=2u32);
        let per_carriage = rng.gen_range(2..=4) as f64;
        let config = TrainConfig::new(carriages, per_carriage).unwrap();
        let departures: Vec<f64> = (0..n_stations).map(|i| (origin + i as i64) as f64).collect();
        trains.push(TrainSchedule {
            active: true,
            stops,
            departures,
            stop_times: vec![0.0; n_stations],
            unit_times: vec![1.0; n_stations - 1],
            config,
        });
        origin += rng.gen_range(1..=15i64);
    }
    if rng.gen_bool(0.3) {
        let config = TrainConfig::new(1, 2.0).unwrap();
        trains.push(TrainSchedule {
            active: false,
            stops: vec![false; n_stations],
            departures: vec![500.0; n_stations],
            stop_times: vec![0.0; n_stations],
            unit_times: vec![1.0; n_stations - 1],
            config,
        });
    }
    let timetable = Timetable::new(n_stations, trains).unwrap();
    OracleInstance {
        od,
        timetable,
        masses,
        n_stations,
    }
}

/// Exact integer seat rationing: grant everything when it fits, else
/// floor the proportional shares and hand out the remaining seats by
/// largest remainder, ties to the nearer destination.
fn ration_exact(pool: &[i64], eligible: &[bool], available: i64) -> Vec<i64> {
    let total: i64 = pool
        .iter()
        .zip(eligible)
        .filter(|(_, &e)| e)
        .map(|(&p, _)| p)
        .sum();
    let mut grant = vec![0i64; pool.len()];
    if total <= 0 || available <= 0 {
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
    let mut used = 0;
    let mut remainders: Vec<(usize, i64)> = Vec::new();
    for (idx, (&p, &e)) in pool.iter().zip(eligible).enumerate() {
        if !e || p <= 0 {
            continue;
        }
        let numerator = p * available;
        let base = numerator / total;
        grant[idx] = base;
        used += base;
        remainders.push((idx, numerator % total));
    }
    remainders.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut units = available - used;
    for (idx, _) in remainders {
        if units < 1 {
            break;
        }
        grant[idx] += 1;
        units -= 1;
    }
    grant
}

/// Everything the simulator tracks, all exact integers.
pub struct OracleFlow {
    pub pairs: Vec<(usize, usize)>,
    /// [train][pair] tensors.
    pub arrived: Vec<Vec<i64>>,
    pub new_boarded: Vec<Vec<i64>>,
    pub new_left: Vec<Vec<i64>>,
    pub waiting: Vec<Vec<i64>>,
    pub waiting_boarded: Vec<Vec<i64>>,
    pub waiting_left: Vec<Vec<i64>>,
    pub boarded: Vec<Vec<i64>>,
    /// [train][station].
    pub arrived_by_origin: Vec<Vec<i64>>,
    pub arrived_by_destination: Vec<Vec<i64>>,
    pub waiting_by_origin: Vec<Vec<i64>>,
    pub waiting_by_destination: Vec<Vec<i64>>,
    pub boarded_by_origin: Vec<Vec<i64>>,
    pub alighted: Vec<Vec<i64>>,
    pub free_capacity: Vec<Vec<i64>>,
    pub leftover: Vec<i64>,
}

fn sum_by_station(
    pairs: &[(usize, usize)],
    values: &[i64],
    n_stations: usize,
    by_origin: bool,
) -> Vec<i64> {
    let mut out = vec![0i64; n_stations];
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        let station = if by_origin { i } else { j };
        out[station - 1] += values[idx];
    }
    out
}

pub fn simulate_exact(inst: &OracleInstance) -> OracleFlow {
    let s = inst.n_stations;
    let pairs: Vec<(usize, usize)> = inst.masses.keys().copied().collect();
    let n_pairs = pairs.len();
    let active: Vec<&TrainSchedule> = inst
        .timetable
        .trains
        .iter()
        .filter(|t| t.active)
        .collect();

    let mut out = OracleFlow {
        pairs: pairs.clone(),
        arrived: Vec::new(),
        new_boarded: Vec::new(),
        new_left: Vec::new(),
        waiting: Vec::new(),
        waiting_boarded: Vec::new(),
        waiting_left: Vec::new(),
        boarded: Vec::new(),
        arrived_by_origin: Vec::new(),
        arrived_by_destination: Vec::new(),
        waiting_by_origin: Vec::new(),
        waiting_by_destination: Vec::new(),
        boarded_by_origin: Vec::new(),
        alighted: Vec::new(),
        free_capacity: Vec::new(),
        leftover: Vec::new(),
    };

    let mut waiting_pool = vec![0i64; n_pairs];
    let mut prev_dep = vec![0i64; s];
    for train in &active {
        let cap = train.config.capacity() as i64;
        let departures: Vec<i64> = train.departures.iter().map(|&d| d as i64).collect();

        let mut arrived = vec![0i64; n_pairs];
        for (idx, &(i, j)) in pairs.iter().enumerate() {
            for &(minute, count) in &inst.masses[&(i, j)] {
                // The burst sits between `minute` and `minute + 1`, so it
                // lands in the window (previous departure, departure].
                let t2 = 2 * minute as i64 + 1;
                if t2 > 2 * prev_dep[i - 1] && t2 < 2 * departures[i - 1] {
                    arrived[idx] += count;
                }
            }
        }
        let waiting = waiting_pool.clone();

        let mut new_boarded = vec![0i64; n_pairs];
        let mut waiting_boarded = vec![0i64; n_pairs];
        let mut alighted = vec![0i64; s];
        let mut free_capacity = vec![0i64; s];
        let mut onboard = vec![0i64; s];
        let mut fs_prev = cap;
        for i in 1..=s {
            let alight = onboard[i - 1];
            onboard[i - 1] = 0;
            alighted[i - 1] = alight;
            let free = if i == 1 { cap } else { fs_prev + alight };
            let mut boarded_here = 0;
            if train.stops[i - 1] && i < s {
                let mut waiting_by_dest = vec![0i64; s];
                let mut new_by_dest = vec![0i64; s];
                let mut eligible = vec![false; s];
                for (idx, &(pi, pj)) in pairs.iter().enumerate() {
                    if pi == i {
                        waiting_by_dest[pj - 1] = waiting[idx];
                        new_by_dest[pj - 1] = arrived[idx];
                        eligible[pj - 1] = train.stops[pj - 1];
                    }
                }
                let wg = ration_exact(&waiting_by_dest, &eligible, free);
                let wg_total: i64 = wg.iter().sum();
                let ng = ration_exact(&new_by_dest, &eligible, free - wg_total);
                for (idx, &(pi, pj)) in pairs.iter().enumerate() {
                    if pi == i {
                        waiting_boarded[idx] = wg[pj - 1];
                        new_boarded[idx] = ng[pj - 1];
                        let total = wg[pj - 1] + ng[pj - 1];
                        onboard[pj - 1] += total;
                        boarded_here += total;
                    }
                }
            }
            let fs = if i == 1 {
                cap - boarded_here
            } else {
                fs_prev + alight - boarded_here
            };
            assert!(fs >= 0 && fs <= cap, "oracle seat balance broke");
            free_capacity[i - 1] = fs;
            fs_prev = fs;
        }

        let boarded: Vec<i64> = new_boarded
            .iter()
            .zip(&waiting_boarded)
            .map(|(n, w)| n + w)
            .collect();
        let new_left: Vec<i64> = arrived.iter().zip(&new_boarded).map(|(a, b)| a - b).collect();
        let waiting_left: Vec<i64> = waiting
            .iter()
            .zip(&waiting_boarded)
            .map(|(w, b)| w - b)
            .collect();
        for idx in 0..n_pairs {
            waiting_pool[idx] += arrived[idx] - boarded[idx];
        }

        out.arrived_by_origin
            .push(sum_by_station(&pairs, &arrived, s, true));
        out.arrived_by_destination
            .push(sum_by_station(&pairs, &arrived, s, false));
        out.waiting_by_origin
            .push(sum_by_station(&pairs, &waiting, s, true));
        out.waiting_by_destination
            .push(sum_by_station(&pairs, &waiting, s, false));
        out.boarded_by_origin
            .push(sum_by_station(&pairs, &boarded, s, true));
        out.arrived.push(arrived);
        out.new_boarded.push(new_boarded);
        out.new_left.push(new_left);
        out.waiting.push(waiting);
        out.waiting_boarded.push(waiting_boarded);
        out.waiting_left.push(waiting_left);
        out.boarded.push(boarded);
        out.alighted.push(alighted);
        out.free_capacity.push(free_capacity);
        prev_dep = departures;
    }
    out.leftover = waiting_pool;
    out
}

fn expect_exact(what: &str, train: usize, got: &[f64], want: &[i64]) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!("{}: train {} length mismatch", what, train + 1));
    }
    for (idx, (&g, &w)) in got.iter().zip(want).enumerate() {
        if g != w as f64 {
            return Err(format!(
                "{}: train {} entry {} is {}, oracle says {}",
                what,
                train + 1,
                idx,
                g,
                w
            ));
        }
    }
    Ok(())
}

/// Run the library loader in whole-passenger mode and demand exact
/// equality with the simulator on every tensor.
pub fn check_oracle_instance(seed: u64) -> Result<FlowState, String> {
    let inst = generate_oracle_instance(seed);
    let oracle = simulate_exact(&inst);
    let opts = FlowOptions {
        integer_passengers: true,
        ..FlowOptions::default()
    };
    let flow = load_passengers(&inst.od, &inst.timetable, &fixture_line_for(&inst), &opts)
        .map_err(|e| format!("seed {}: loader failed: {}", seed, e))?;

    if flow.pairs.pairs() != oracle.pairs.as_slice() {
        return Err(format!("seed {}: pair sets differ", seed));
    }
    if flow.trains.len() != oracle.arrived.len() {
        return Err(format!(
            "seed {}: {} active trains loaded, oracle has {}",
            seed,
            flow.trains.len(),
            oracle.arrived.len()
        ));
    }
    for (k, train) in flow.trains.iter().enumerate() {
        let against = [
            ("arrived", &train.arrived, &oracle.arrived[k]),
            ("new_boarded", &train.new_boarded, &oracle.new_boarded[k]),
            ("new_left", &train.new_left, &oracle.new_left[k]),
            ("waiting", &train.waiting, &oracle.waiting[k]),
            (
                "waiting_boarded",
                &train.waiting_boarded,
                &oracle.waiting_boarded[k],
            ),
            ("waiting_left", &train.waiting_left, &oracle.waiting_left[k]),
            ("boarded", &train.boarded, &oracle.boarded[k]),
        ];
        for (what, got, want) in against {
            expect_exact(what, k, got, want).map_err(|e| format!("seed {}: {}", seed, e))?;
        }
        let station_side = [
            (
                "arrived_by_origin",
                &train.arrived_by_origin,
                &oracle.arrived_by_origin[k],
            ),
            (
                "arrived_by_destination",
                &train.arrived_by_destination,
                &oracle.arrived_by_destination[k],
            ),
            (
                "waiting_by_origin",
                &train.waiting_by_origin,
                &oracle.waiting_by_origin[k],
            ),
            (
                "waiting_by_destination",
                &train.waiting_by_destination,
                &oracle.waiting_by_destination[k],
            ),
            (
                "boarded_by_origin",
                &train.boarded_by_origin,
                &oracle.boarded_by_origin[k],
            ),
            (
                "alighted_by_destination",
                &train.alighted_by_destination,
                &oracle.alighted[k],
            ),
            ("free_capacity", &train.free_capacity, &oracle.free_capacity[k]),
        ];
        for (what, got, want) in station_side {
            expect_exact(what, k, got, want).map_err(|e| format!("seed {}: {}", seed, e))?;
        }
    }
    expect_exact("leftover", 0, &flow.leftover, &oracle.leftover)
        .map_err(|e| format!("seed {}: {}", seed, e))?;
    Ok(flow)
}

/// Loading ignores the line beyond station count; any consistent one
/// works.
fn fixture_line_for(inst: &OracleInstance) -> Line {
    let segments = (0..inst.n_stations - 1)
        .map(|_| Segment::new(1.0, 1.0, 2.0, 0.0, 0.0).unwrap())
        .collect();
    Line::new(
        segments,
        vec![1.0; inst.n_stations],
        0.0,
        2.0,
        0.0,
        60.0,
        false,
    )
    .unwrap()
}

/// One randomly generated instance with smooth fractional demand and
/// ordinary train shapes, for tolerance-based identity checks.
pub struct FractionalInstance {
    pub line: Line,
    pub od: OdMatrix,
    pub timetable: Timetable,
}

pub fn generate_fractional_instance(seed: u64) -> FractionalInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    let n_stations = rng.gen_range(2..=5usize);
    let segments: Vec<Segment> = (1..n_stations)
        .map(|_| {
            let length = rng.gen_range(1.0..8.0);
            let fastest = rng.gen_range(0.5..1.2);
            let slowest = fastest + rng.gen_range(0.3..1.3);
            Segment::new(length, fastest, slowest, 0.3, 0.25).unwrap()
        })
        .collect();
    let horizon = 300.0;
    let line = Line::new(
        segments,
        vec![rng.gen_range(1.0..3.0); n_stations],
        0.3,
        2.0,
        rng.gen_range(0.002..0.01),
        horizon,
        rng.gen_bool(0.5),
    )
    .unwrap();

    let mut od = OdMatrix::new(n_stations).unwrap();
    let mut any = false;
    for i in 1..n_stations {
        for j in (i + 1)..=n_stations {
            if rng.gen_bool(0.7) || (!any && (i, j) == (n_stations - 1, n_stations)) {
                let terms: Vec<SigmoidTerm> = (0..rng.gen_range(1..=3))
                    .map(|_| {
                        SigmoidTerm::new(
                            rng.gen_range(5.0..80.0),
                            rng.gen_range(0.02..0.5),
                            rng.gen_range(0.0..250.0),
                        )
                        .unwrap()
                    })
                    .collect();
                od.set(i, j, SigmoidSum::new(terms)).unwrap();
                any = true;
            }
        }
    }

    let n_trains = rng.gen_range(1..=4usize);
    let mut trains: Vec<TrainSchedule> = Vec::new();
    let mut origin = rng.gen_range(5.0..20.0);
    for _ in 0..n_trains {
        let config = TrainConfig::new(rng.gen_range(1..=3), rng.gen_range(20.0..60.0)).unwrap();
        let mut train = TrainSchedule::full_stopper(&line, config, origin);
        for i in 1..n_stations - 1 {
            if rng.gen_bool(0.3) {
                train.stops[i] = false;
                train.stop_times[i] = 0.0;
            }
        }
        for i in 0..n_stations {
            if train.stops[i] {
                train.stop_times[i] = rng.gen_range(0.3..1.5);
            }
        }
        for (k, pace) in train.unit_times.iter_mut().enumerate() {
            let seg = line.segment(k + 1);
            *pace = rng.gen_range(seg.unit_time_min..seg.unit_time_max);
        }
        train.propagate(&line);
        if let Some(prev) = trains.last() {
            let mut shift = 0.0f64;
            for i in 0..n_stations {
                shift = shift.max(prev.departures[i] + 0.5 - train.departures[i]);
            }
            if shift > 0.0 {
                train.departures[0] += shift;
                train.propagate(&line);
            }
        }
        origin = train.departures[0] + rng.gen_range(2.0..10.0);
        trains.push(train);
    }
    let timetable = Timetable::new(n_stations, trains).unwrap();
    FractionalInstance {
        line,
        od,
        timetable,
    }
}

/// Largest absolute residual over the per-train bookkeeping identities:
/// the two split/total decompositions per pair and the station sums.
pub fn balance_residual(flow: &FlowState) -> f64 {
    let n_pairs = flow.pairs.pairs().len();
    let s = flow.pairs.n_stations();
    let mut worst = 0.0f64;
    for train in &flow.trains {
        for idx in 0..n_pairs {
            worst = worst.max(
                (train.arrived[idx] - (train.new_boarded[idx] + train.new_left[idx])).abs(),
            );
            worst = worst.max(
                (train.waiting[idx] - (train.waiting_boarded[idx] + train.waiting_left[idx]))
                    .abs(),
            );
            worst = worst.max(
                (train.boarded[idx] - (train.new_boarded[idx] + train.waiting_boarded[idx]))
                    .abs(),
            );
        }
        let mut by_origin = vec![0.0f64; s];
        let mut boarded_by_origin = vec![0.0f64; s];
        let mut alighted = vec![0.0f64; s];
        for (idx, &(i, j)) in flow.pairs.pairs().iter().enumerate() {
            by_origin[i - 1] += train.arrived[idx];
            boarded_by_origin[i - 1] += train.boarded[idx];
            alighted[j - 1] += train.boarded[idx];
        }
        for i in 0..s {
            worst = worst.max((train.arrived_by_origin[i] - by_origin[i]).abs());
            worst = worst.max((train.boarded_by_origin[i] - boarded_by_origin[i]).abs());
            worst = worst.max((train.alighted_by_destination[i] - alighted[i]).abs());
        }
        worst = worst.max((train.capacity - train.free_capacity[s - 1]).abs());
    }
    worst
}

/// Largest deviation between each pair's leftover and the canonical
/// accumulation of (arrived - boarded) in train order, mirroring the
/// loader's own pool update including its tiny-negative snap. Zero means
/// passenger conservation held exactly.
pub fn conservation_residual(flow: &FlowState) -> f64 {
    let mut worst = 0.0f64;
    for idx in 0..flow.pairs.pairs().len() {
        let mut pool = 0.0f64;
        for train in &flow.trains {
            pool += train.arrived[idx] - train.boarded[idx];
            if pool < 0.0 && pool > -1e-9 {
                pool = 0.0;
            }
        }
        worst = worst.max((pool - flow.leftover[idx]).abs());
    }
    worst
}
