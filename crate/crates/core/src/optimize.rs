//! Timetable search.
//!
//! The decision vector is the set of origin departures of the active
//! trains; downstream times follow from propagation and the dwell fixed
//! point. The search is multi-start coordinate descent with a halving step
//! schedule and a headway repair that delays followers just enough to
//! restore separation. Train count and rolling stock are enumerated
//! outside the descent, so every (count, capacity) cell is a pure function
//! of its inputs and a seed.

use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::demand::OdMatrix;
use crate::error::{Error, Result};
use crate::flow::{awt_to_horizon, evaluate_fixed_point, AwtBreakdown, FlowOptions, FlowState};
use crate::line::{
    train_count_upper_bound, validate, ConstraintKind, Line, Timetable, TrainConfig, TrainSchedule,
    FEASIBILITY_TOL,
};
use crate::util::mix_seed;

/// How rolling stock is assigned to the fleet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapacityMode {
    /// A shared capacity pool, converted to carriages and split as evenly
    /// as possible over the active trains.
    GlobalCapacity {
        total_capacity: f64,
        capacity_per_carriage: f64,
    },
    /// Every active train runs the same consist.
    PerTrainCarriages {
        carriages: u32,
        capacity_per_carriage: f64,
    },
}

/// Whether intermediate stops are searched or kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoppingMode {
    /// Every active train calls at every station.
    AllStops,
    /// Start from all stops, then greedily drop low-traffic calls while
    /// that improves the objective. Terminals always keep their stop.
    OptimizeStops,
}

/// Knobs of the descent itself.
#[derive(Debug, Clone)]
pub struct SearchParams {
    /// First coordinate step, minutes.
    pub initial_step: f64,
    /// Last coordinate step, minutes. The schedule halves down to this.
    pub final_step: f64,
    /// A full sweep at the final step improving less than this ends the
    /// descent.
    pub sweep_tol: f64,
    /// Cap on sweeps at one step level.
    pub max_sweeps_per_level: usize,
    /// Random restarts derived from each structured seed.
    pub jitters: usize,
    /// Wall-clock safety cap per structure. Exceeding it returns the best
    /// found so far with `converged` unset; runs that race the cap are not
    /// reproducible, so size it generously.
    pub budget: Option<Duration>,
    pub flow: FlowOptions,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            initial_step: 8.0,
            final_step: 0.05,
            sweep_tol: 1e-4,
            max_sweeps_per_level: 40,
            jitters: 4,
            budget: Some(Duration::from_secs(60)),
            flow: FlowOptions::default(),
        }
    }
}

/// One optimization task: line, demand, fleet policy, search knobs.
#[derive(Debug, Clone)]
pub struct OptimizationProblem<'a> {
    pub line: &'a Line,
    pub od: &'a OdMatrix,
    pub capacity_mode: CapacityMode,
    /// Pin the active train count instead of enumerating it.
    pub fixed_train_count: Option<usize>,
    pub stopping_mode: StoppingMode,
    /// Search per-segment pace as well. Off by default; the objective
    /// never rewards running slower than the minimum unit time.
    pub optimize_speeds: bool,
    pub search: SearchParams,
    pub seed: u64,
}

impl<'a> OptimizationProblem<'a> {
    pub fn new(line: &'a Line, od: &'a OdMatrix, capacity_mode: CapacityMode) -> Self {
        OptimizationProblem {
            line,
            od,
            capacity_mode,
            fixed_train_count: None,
            stopping_mode: StoppingMode::AllStops,
            optimize_speeds: false,
            search: SearchParams::default(),
            seed: 0,
        }
    }
}

/// Work done by a solve. Wall time is informational and is left out of
/// serialized reports so reruns stay byte-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverStats {
    pub evaluations: u64,
    pub sweeps: u64,
    pub starts: u32,
    pub train_count: usize,
    /// Cleared when the wall-clock budget cut the search short.
    pub converged: bool,
    pub wall_time_secs: f64,
}

/// A feasible timetable with its passenger flow and objective.
#[derive(Debug, Clone)]
pub struct Solution {
    pub timetable: Timetable,
    pub flow: FlowState,
    /// Horizon-closed average waiting, the quantity minimized.
    pub awt: AwtBreakdown,
    pub stats: SolverStats,
}

/// Split carriages over trains as evenly as possible; front trains take
/// the remainder, so counts differ by at most one.
pub fn choose_capacity_split(total_carriages: u32, train_count: usize) -> Result<Vec<u32>> {
    if train_count == 0 {
        return Err(Error::invalid("cannot split carriages over zero trains"));
    }
    let n = train_count as u32;
    if total_carriages < n {
        return Err(Error::invalid(format!(
            "{} carriages cannot stock {} trains",
            total_carriages, train_count
        )));
    }
    let base = total_carriages / n;
    let extra = (total_carriages % n) as usize;
    Ok((0..train_count)
        .map(|k| if k < extra { base + 1 } else { base })
        .collect())
}

/// Consists for `count` active trains under the given policy.
pub fn fleet_configs(mode: CapacityMode, count: usize) -> Result<Vec<TrainConfig>> {
    match mode {
        CapacityMode::GlobalCapacity {
            total_capacity,
            capacity_per_carriage,
        } => {
            let total = total_carriages(total_capacity, capacity_per_carriage)?;
            choose_capacity_split(total, count)?
                .into_iter()
                .map(|c| TrainConfig::new(c, capacity_per_carriage))
                .collect()
        }
        CapacityMode::PerTrainCarriages {
            carriages,
            capacity_per_carriage,
        } => {
            let config = TrainConfig::new(carriages, capacity_per_carriage)?;
            Ok(vec![config; count])
        }
    }
}

/// Capacity of the smallest train the policy can produce, the divisor in
/// the fleet-size bound.
pub fn min_train_capacity(mode: CapacityMode) -> Result<f64> {
    match mode {
        CapacityMode::GlobalCapacity {
            capacity_per_carriage,
            ..
        } => {
            if !(capacity_per_carriage.is_finite() && capacity_per_carriage > 0.0) {
                return Err(Error::invalid("carriage capacity must be positive"));
            }
            Ok(capacity_per_carriage)
        }
        CapacityMode::PerTrainCarriages {
            carriages,
            capacity_per_carriage,
        } => Ok(TrainConfig::new(carriages, capacity_per_carriage)?.capacity()),
    }
}

fn total_carriages(total_capacity: f64, capacity_per_carriage: f64) -> Result<u32> {
    if !(capacity_per_carriage.is_finite() && capacity_per_carriage > 0.0) {
        return Err(Error::invalid("carriage capacity must be positive"));
    }
    if !(total_capacity.is_finite() && total_capacity > 0.0) {
        return Err(Error::invalid("total capacity must be positive"));
    }
    let ratio = total_capacity / capacity_per_carriage;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > 1e-6 || rounded < 1.0 {
        return Err(Error::invalid(format!(
            "total capacity {} is not a whole number of carriages of {}",
            total_capacity, capacity_per_carriage
        )));
    }
    Ok(rounded as u32)
}

/// Candidate ranking: objective, then total dwell, then earliest
/// departures. All comparisons are exact so ranking is reproducible.
#[derive(Debug, Clone)]
struct Score {
    awt: f64,
    stop_minutes: f64,
    origins: Vec<f64>,
}

impl Score {
    fn better_than(&self, other: &Score) -> bool {
        if self.awt != other.awt {
            return self.awt < other.awt;
        }
        if self.stop_minutes != other.stop_minutes {
            return self.stop_minutes < other.stop_minutes;
        }
        for (a, b) in self.origins.iter().zip(&other.origins) {
            if a != b {
                return a < b;
            }
        }
        false
    }
}

#[derive(Debug, Clone)]
struct Evaluated {
    score: Score,
    timetable: Timetable,
    flow: FlowState,
    awt: AwtBreakdown,
}

/// Stop pattern and pace per train, the part of the structure the inner
/// search may edit.
#[derive(Debug, Clone)]
struct Shape {
    stops: Vec<Vec<bool>>,
    unit_times: Vec<Vec<f64>>,
}

impl Shape {
    fn all_stops(line: &Line, count: usize) -> Shape {
        let fastest: Vec<f64> = line.segments().iter().map(|s| s.unit_time_min).collect();
        Shape {
            stops: vec![vec![true; line.n_stations()]; count],
            unit_times: vec![fastest; count],
        }
    }
}

struct SearchContext<'a> {
    line: &'a Line,
    od: &'a OdMatrix,
    configs: &'a [TrainConfig],
    params: &'a SearchParams,
    optimize_speeds: bool,
}

#[derive(Debug, Default, Clone)]
struct DescentStats {
    evaluations: u64,
    sweeps: u64,
    interrupted: bool,
}

const MAX_REPAIR_ROUNDS: usize = 8;

impl<'a> SearchContext<'a> {
    fn n_trains(&self) -> usize {
        self.configs.len()
    }

    /// Build, repair, and settle one candidate. Returns the evaluated
    /// point, or the reason it cannot be operated.
    fn evaluate(
        &self,
        shape: &Shape,
        origins: &[f64],
        evals: &mut u64,
    ) -> std::result::Result<Evaluated, String> {
        *evals += 1;
        let line = self.line;
        let horizon = line.horizon();
        let s = line.n_stations();
        let mut sorted = origins.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("departure times are ordered"));

        let mut trains: Vec<TrainSchedule> = Vec::with_capacity(sorted.len());
        for (k, &dep) in sorted.iter().enumerate() {
            let mut train = TrainSchedule::full_stopper(line, self.configs[k], dep.max(0.0));
            train.stops.copy_from_slice(&shape.stops[k]);
            for i in 0..s {
                train.stop_times[i] = if train.stops[i] { line.min_stop() } else { 0.0 };
            }
            train.unit_times.copy_from_slice(&shape.unit_times[k]);
            train.propagate(line);
            trains.push(train);
        }
        let mut tt = Timetable::new(s, trains).map_err(|e| e.to_string())?;

        for _round in 0..MAX_REPAIR_ROUNDS {
            push_followers(&mut tt, line);
            let last = tt.trains.last().expect("at least one train");
            if last.origin_departure() > horizon + FEASIBILITY_TOL {
                return Err(format!(
                    "train {} pushed to depart at {:.3}, past the horizon {:.3}",
                    tt.trains.len(),
                    last.origin_departure(),
                    horizon
                ));
            }
            let (settled, flow) =
                evaluate_fixed_point(self.od, &tt, line, &self.params.flow).map_err(|e| e.to_string())?;
            let report = validate(&settled, line).map_err(|e| e.to_string())?;
            let headway_broken = report
                .violations
                .iter()
                .any(|v| v.kind == ConstraintKind::Headway);
            if !headway_broken {
                if !report.feasible() {
                    return Err(format!(
                        "settled timetable breaks {} constraint",
                        report.violations[0].kind.label()
                    ));
                }
                let awt = awt_to_horizon(&flow, self.od, line).map_err(|e| e.to_string())?;
                if !awt.total_awt.is_finite() {
                    return Err("objective is not finite".into());
                }
                let score = Score {
                    awt: awt.total_awt,
                    stop_minutes: settled.total_stop_minutes(),
                    origins: settled.active_origin_departures(),
                };
                return Ok(Evaluated {
                    score,
                    timetable: settled,
                    flow,
                    awt,
                });
            }
            // Dwell growth reopened a separation gap: keep the settled
            // dwells and push again.
            tt = settled;
        }
        Err("headway repair did not settle".into())
    }

    fn descend(
        &self,
        shape: &Shape,
        start: &[f64],
        deadline: Option<Instant>,
        stats: &mut DescentStats,
    ) -> Option<Evaluated> {
        let horizon = self.line.horizon();
        let n = self.n_trains();
        let mut best = self.evaluate(shape, start, &mut stats.evaluations).ok()?;
        let mut shape = shape.clone();

        let mut step = self.params.initial_step;
        loop {
            let final_level = step <= self.params.final_step;
            let mut sweeps_here = 0;
            loop {
                if let Some(d) = deadline {
                    if Instant::now() >= d {
                        stats.interrupted = true;
                        return Some(best);
                    }
                }
                let before = best.score.awt;
                let mut improved = false;
                for k in 0..n {
                    for dir in [1.0f64, -1.0] {
                        let mut cand = best.score.origins.clone();
                        cand[k] += dir * step;
                        if cand[k] < 0.0 || cand[k] > horizon {
                            continue;
                        }
                        if let Ok(ev) = self.evaluate(&shape, &cand, &mut stats.evaluations) {
                            if ev.score.better_than(&best.score) {
                                best = ev;
                                improved = true;
                            }
                        }
                    }
                }
                if self.optimize_speeds {
                    improved |= self.sweep_speeds(&mut shape, &mut best, step, stats);
                }
                stats.sweeps += 1;
                sweeps_here += 1;
                if !improved {
                    break;
                }
                if final_level && before - best.score.awt < self.params.sweep_tol {
                    return Some(best);
                }
                if sweeps_here >= self.params.max_sweeps_per_level {
                    break;
                }
            }
            if final_level {
                return Some(best);
            }
            step = (step / 2.0).max(self.params.final_step);
        }
    }

    /// One coordinate pass over per-segment pace, step scaled to the
    /// allowed range.
    fn sweep_speeds(
        &self,
        shape: &mut Shape,
        best: &mut Evaluated,
        step: f64,
        stats: &mut DescentStats,
    ) -> bool {
        let mut improved = false;
        let fraction = step / self.params.initial_step;
        for k in 0..self.n_trains() {
            for (r, seg) in self.line.segments().iter().enumerate() {
                let range = seg.unit_time_max - seg.unit_time_min;
                if range <= 0.0 {
                    continue;
                }
                let delta = range * fraction;
                for dir in [1.0f64, -1.0] {
                    let current = shape.unit_times[k][r];
                    let cand = (current + dir * delta).clamp(seg.unit_time_min, seg.unit_time_max);
                    if cand == current {
                        continue;
                    }
                    shape.unit_times[k][r] = cand;
                    match self.evaluate(&shape, &best.score.origins, &mut stats.evaluations) {
                        Ok(ev) if ev.score.better_than(&best.score) => {
                            *best = ev;
                            improved = true;
                        }
                        _ => shape.unit_times[k][r] = current,
                    }
                }
            }
        }
        improved
    }

    /// Greedy stop thinning: visit served interior calls from the least
    /// used upward, drop a call when that improves the score, restart
    /// after every acceptance because traffic shifts.
    fn thin_stops(
        &self,
        shape: &mut Shape,
        best: &mut Evaluated,
        deadline: Option<Instant>,
        stats: &mut DescentStats,
    ) {
        let s = self.line.n_stations();
        if s <= 2 {
            return;
        }
        loop {
            if let Some(d) = deadline {
                if Instant::now() >= d {
                    stats.interrupted = true;
                    return;
                }
            }
            let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
            for (k, train) in best.flow.trains.iter().enumerate() {
                for i in 2..s {
                    if shape.stops[k][i - 1] {
                        let mass =
                            train.boarded_by_origin[i - 1] + train.alighted_by_destination[i - 1];
                        candidates.push((mass, k, i));
                    }
                }
            }
            candidates.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .expect("traffic masses are ordered")
                    .then(a.1.cmp(&b.1))
                    .then(a.2.cmp(&b.2))
            });
            let mut accepted = false;
            for &(_, k, i) in &candidates {
                shape.stops[k][i - 1] = false;
                match self.evaluate(shape, &best.score.origins, &mut stats.evaluations) {
                    Ok(ev) if ev.score.better_than(&best.score) => {
                        *best = ev;
                        accepted = true;
                        break;
                    }
                    _ => shape.stops[k][i - 1] = true,
                }
            }
            if !accepted {
                return;
            }
        }
    }
}

/// Delay each follower just enough to restore the safety gap behind its
/// leader, front to back. Shifting a whole train keeps propagation intact.
fn push_followers(tt: &mut Timetable, line: &Line) {
    let s = tt.n_stations();
    for kb in 1..tt.trains.len() {
        let ka = kb - 1;
        let mut shift = 0.0f64;
        for i in 1..=s {
            let needed = tt.trains[ka].departures[i - 1] + line.headway(i, ka + 1);
            let arrival = tt.trains[kb].departures[i - 1] - tt.trains[kb].stop_times[i - 1];
            shift = shift.max(needed - arrival);
        }
        if shift > 0.0 {
            for d in &mut tt.trains[kb].departures {
                *d += shift;
            }
        }
    }
}

/// Time at which a given fraction of total demand has accumulated.
fn demand_quantile(od: &OdMatrix, fraction: f64, horizon: f64) -> f64 {
    let total = od.total_over(0.0, horizon);
    if total <= 0.0 {
        return fraction * horizon;
    }
    let target = fraction * total;
    let (mut lo, mut hi) = (0.0f64, horizon);
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if od.total_over(0.0, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Grow a departure vector to `n` entries by repeatedly splitting the
/// widest gap, horizon boundaries included.
fn grow_seed(base: &[f64], n: usize, horizon: f64) -> Vec<f64> {
    let mut deps: Vec<f64> = base.to_vec();
    deps.sort_by(|a, b| a.partial_cmp(b).expect("departure times are ordered"));
    deps.truncate(n);
    while deps.len() < n {
        let mut best_gap = -1.0;
        let mut best_mid = 0.0;
        let mut prev = 0.0;
        for &d in deps.iter().chain(std::iter::once(&horizon)) {
            let gap = d - prev;
            if gap > best_gap {
                best_gap = gap;
                best_mid = prev + 0.5 * gap;
            }
            prev = d;
        }
        let at = deps.partition_point(|&d| d <= best_mid);
        deps.insert(at, best_mid);
    }
    deps
}

/// Smaller counts whose refined solutions seed this one. A fixed ladder,
/// so a cell's seeds never depend on which other cells are being run.
fn seed_ladder(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = [1usize, 2, 3, 5, 8, 13, 21, 34, 55, 89]
        .iter()
        .copied()
        .filter(|&m| m < n)
        .collect();
    if n >= 2 && !out.contains(&(n - 1)) {
        out.push(n - 1);
    }
    out
}

/// Structured starting points plus seeded jitters of each.
fn build_seeds(problem: &OptimizationProblem<'_>, count: usize) -> Vec<Vec<f64>> {
    let horizon = problem.line.horizon();
    let n = count as f64;
    let even_end: Vec<f64> = (1..=count).map(|k| k as f64 * horizon / n).collect();
    let even_closed: Vec<f64> = (1..=count)
        .map(|k| k as f64 * horizon / (n + 1.0))
        .collect();
    let quantile_end: Vec<f64> = (1..=count)
        .map(|k| demand_quantile(problem.od, k as f64 / n, horizon))
        .collect();
    let quantile_closed: Vec<f64> = (1..=count)
        .map(|k| demand_quantile(problem.od, k as f64 / (n + 1.0), horizon))
        .collect();

    let mut seeds = vec![even_end, even_closed, quantile_end, quantile_closed];
    for m in seed_ladder(count) {
        let base: Vec<f64> = (1..=m)
            .map(|k| demand_quantile(problem.od, k as f64 / (m as f64 + 1.0), horizon))
            .collect();
        seeds.push(grow_seed(&base, count, horizon));
    }

    let amplitude = horizon / (4.0 * n);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(problem.seed, count as u64, 0x5eed));
    let bases = seeds.clone();
    for base in &bases[..4.min(bases.len())] {
        for _ in 0..problem.search.jitters {
            let mut jittered: Vec<f64> = base
                .iter()
                .map(|&t| {
                    let u: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                    (t + u * amplitude).clamp(0.0, horizon)
                })
                .collect();
            jittered.sort_by(|a, b| a.partial_cmp(b).expect("departure times are ordered"));
            seeds.push(jittered);
        }
    }
    seeds.dedup();
    seeds
}

struct StructureOutcome {
    best: Evaluated,
    stats: DescentStats,
    starts: u32,
}

/// Run the full descent pipeline for one structure from the given seeds.
fn run_structure(
    problem: &OptimizationProblem<'_>,
    configs: &[TrainConfig],
    seeds: &[Vec<f64>],
    deadline: Option<Instant>,
) -> Result<StructureOutcome> {
    let ctx = SearchContext {
        line: problem.line,
        od: problem.od,
        configs,
        params: &problem.search,
        optimize_speeds: problem.optimize_speeds,
    };
    let base_shape = Shape::all_stops(problem.line, configs.len());

    let results: Vec<(Option<Evaluated>, DescentStats)> = seeds
        .par_iter()
        .map(|seed| {
            let mut stats = DescentStats::default();
            let best = ctx.descend(&base_shape, seed, deadline, &mut stats);
            (best, stats)
        })
        .collect();

    let mut stats = DescentStats::default();
    let mut best: Option<Evaluated> = None;
    for (found, s) in results {
        stats.evaluations += s.evaluations;
        stats.sweeps += s.sweeps;
        stats.interrupted |= s.interrupted;
        if let Some(ev) = found {
            let replace = match &best {
                None => true,
                Some(b) => ev.score.better_than(&b.score),
            };
            if replace {
                best = Some(ev);
            }
        }
    }
    let mut best = best.ok_or_else(|| {
        let probe: Vec<f64> = vec![0.0; configs.len()];
        let mut scratch = 0u64;
        let reason = match ctx.evaluate(&base_shape, &probe, &mut scratch) {
            Ok(_) => "no descent produced a feasible timetable".to_string(),
            Err(why) => why,
        };
        Error::infeasible(format!(
            "{} trains cannot be operated over this horizon: {}",
            configs.len(),
            reason
        ))
    })?;

    if problem.stopping_mode == StoppingMode::OptimizeStops {
        let mut shape = base_shape.clone();
        ctx.thin_stops(&mut shape, &mut best, deadline, &mut stats);
        let mut polish = DescentStats::default();
        if let Some(better) = ctx.descend(&shape, &best.score.origins.clone(), deadline, &mut polish)
        {
            if better.score.better_than(&best.score) {
                best = better;
            }
        }
        stats.evaluations += polish.evaluations;
        stats.sweeps += polish.sweeps;
        stats.interrupted |= polish.interrupted;
    }

    Ok(StructureOutcome {
        best,
        stats,
        starts: seeds.len() as u32,
    })
}

fn outcome_to_solution(outcome: StructureOutcome, count: usize, started: Instant) -> Solution {
    Solution {
        timetable: outcome.best.timetable,
        flow: outcome.best.flow,
        awt: outcome.best.awt,
        stats: SolverStats {
            evaluations: outcome.stats.evaluations,
            sweeps: outcome.stats.sweeps,
            starts: outcome.starts,
            train_count: count,
            converged: !outcome.stats.interrupted,
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
    }
}

/// Best timetable for a pinned train count and rolling-stock policy. The
/// result depends only on the problem and its seed, never on other cells
/// solved nearby.
pub fn solve_with_fixed_structure(
    problem: &OptimizationProblem<'_>,
    count: usize,
    extra_seeds: &[Vec<f64>],
) -> Result<Solution> {
    let started = Instant::now();
    check_problem(problem)?;
    let configs = fleet_configs(problem.capacity_mode, count)?;
    let mut seeds = build_seeds(problem, count);
    for extra in extra_seeds {
        if extra.len() == count {
            seeds.push(grow_seed(extra, count, problem.line.horizon()));
        }
    }
    let deadline = problem.search.budget.map(|b| started + b);
    let outcome = run_structure(problem, &configs, &seeds, deadline)?;
    Ok(outcome_to_solution(outcome, count, started))
}

fn check_problem(problem: &OptimizationProblem<'_>) -> Result<()> {
    if problem.od.n_stations() != problem.line.n_stations() {
        return Err(Error::invalid(format!(
            "demand is for {} stations, line has {}",
            problem.od.n_stations(),
            problem.line.n_stations()
        )));
    }
    if problem.od.total_over(0.0, problem.line.horizon()) <= 0.0 {
        return Err(Error::invalid(
            "cannot plan service for zero total demand",
        ));
    }
    if !(problem.search.initial_step >= problem.search.final_step
        && problem.search.final_step > 0.0)
    {
        return Err(Error::invalid("step schedule must decrease to a positive step"));
    }
    Ok(())
}

/// Full search: enumerate train counts up to the fleet-size bound (or the
/// pinned count), solve each structure, and keep the best. Ties prefer
/// fewer trains, then less dwell, then earlier departures.
pub fn optimize(problem: &OptimizationProblem<'_>) -> Result<Solution> {
    let started = Instant::now();
    check_problem(problem)?;
    let horizon = problem.line.horizon();

    let counts: Vec<usize> = match problem.fixed_train_count {
        Some(0) => return Err(Error::invalid("train count must be at least one")),
        Some(n) => vec![n],
        None => {
            let bound = train_count_upper_bound(
                problem.od,
                horizon,
                min_train_capacity(problem.capacity_mode)?,
            )?;
            let cap = match problem.capacity_mode {
                CapacityMode::GlobalCapacity {
                    total_capacity,
                    capacity_per_carriage,
                } => bound.min(total_carriages(total_capacity, capacity_per_carriage)? as usize),
                CapacityMode::PerTrainCarriages { .. } => bound,
            };
            (1..=cap.max(1)).collect()
        }
    };

    let deadline = problem.search.budget.map(|b| started + b);

    // Phase A: every count from its own seeds, cells independent.
    let phase_a: Vec<(usize, Result<StructureOutcome>)> = counts
        .par_iter()
        .map(|&count| {
            let outcome = fleet_configs(problem.capacity_mode, count).and_then(|configs| {
                run_structure(problem, &configs, &build_seeds(problem, count), deadline)
            });
            (count, outcome)
        })
        .collect();

    let mut cells: Vec<(usize, StructureOutcome)> = Vec::new();
    let mut first_err: Option<Error> = None;
    for (count, outcome) in phase_a {
        match outcome {
            Ok(o) => cells.push((count, o)),
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(first_err.unwrap_or_else(|| Error::infeasible("no feasible train count")));
    }

    // Phase B: reseed each count from the best smaller solution, in
    // order, to smooth the frontier. Still deterministic, just sequential.
    if counts.len() > 1 {
        let mut best_so_far: Option<(usize, Vec<f64>, f64)> = None;
        for idx in 0..cells.len() {
            let count = cells[idx].0;
            if let Some((prev_count, prev_origins, _)) = best_so_far.clone() {
                if prev_count < count {
                    let configs = fleet_configs(problem.capacity_mode, count)?;
                    let warm = grow_seed(&prev_origins, count, horizon);
                    if let Ok(rerun) =
                        run_structure(problem, &configs, std::slice::from_ref(&warm), deadline)
                    {
                        let cell = &mut cells[idx].1;
                        cell.stats.evaluations += rerun.stats.evaluations;
                        cell.stats.sweeps += rerun.stats.sweeps;
                        cell.stats.interrupted |= rerun.stats.interrupted;
                        cell.starts += rerun.starts;
                        if rerun.best.score.better_than(&cell.best.score) {
                            cell.best = rerun.best;
                        }
                    }
                }
            }
            let awt = cells[idx].1.best.score.awt;
            let replace = match &best_so_far {
                None => true,
                Some((_, _, best_awt)) => awt < *best_awt,
            };
            if replace {
                best_so_far = Some((count, cells[idx].1.best.score.origins.clone(), awt));
            }
        }
    }

    let mut best_idx = 0;
    for idx in 1..cells.len() {
        let better = {
            let (cnt_b, ref b) = cells[best_idx];
            let (cnt_c, ref c) = cells[idx];
            if c.best.score.awt != b.best.score.awt {
                c.best.score.awt < b.best.score.awt
            } else if cnt_c != cnt_b {
                cnt_c < cnt_b
            } else {
                c.best.score.better_than(&b.best.score)
            }
        };
        if better {
            best_idx = idx;
        }
    }
    let evaluations: u64 = cells.iter().map(|(_, c)| c.stats.evaluations).sum();
    let sweeps: u64 = cells.iter().map(|(_, c)| c.stats.sweeps).sum();
    let starts: u32 = cells.iter().map(|(_, c)| c.starts).sum();
    let interrupted = cells.iter().any(|(_, c)| c.stats.interrupted);
    let (count, outcome) = cells.swap_remove(best_idx);
    let mut solution = outcome_to_solution(outcome, count, started);
    solution.stats.evaluations = evaluations;
    solution.stats.sweeps = sweeps;
    solution.stats.starts = starts;
    solution.stats.converged = !interrupted;
    Ok(solution)
}
