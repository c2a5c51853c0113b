//! Constraint sweeps over train count and capacity.
//!
//! Each grid cell pins the active train count and the rolling stock, then
//! runs the full timetable search. Cells are pure functions of the problem
//! and the seed: no cell borrows state from a neighbor, so a sweep can run
//! cells in any order or in parallel and still produce the same points,
//! and a cell reproduces bit-identically when run on its own.

use rayon::prelude::*;

use crate::demand::OdMatrix;
use crate::error::{Error, Result};
use crate::line::{train_count_upper_bound, Line};
use crate::metrics::{summarize, TimetableMetrics};
use crate::optimize::{
    solve_with_fixed_structure, CapacityMode, OptimizationProblem, SearchParams, Solution,
    StoppingMode,
};

/// Which quantity the capacity axis varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Levels are total capacities in passengers, split over the fleet.
    FixedGlobalCapacity,
    /// Levels are carriages per train, the same for every train.
    FixedPerTrainCapacity,
}

/// A capacity x train-count grid to solve.
#[derive(Debug, Clone)]
pub struct SweepSpec<'a> {
    pub line: &'a Line,
    pub od: &'a OdMatrix,
    pub mode: SweepMode,
    /// Passengers per level in global mode, carriages per train otherwise.
    pub capacity_levels: Vec<f64>,
    pub train_counts: Vec<usize>,
    pub capacity_per_carriage: f64,
    pub stopping_mode: StoppingMode,
    pub optimize_speeds: bool,
    pub search: SearchParams,
    pub seed: u64,
}

impl<'a> SweepSpec<'a> {
    pub fn new(line: &'a Line, od: &'a OdMatrix, mode: SweepMode) -> Self {
        SweepSpec {
            line,
            od,
            mode,
            capacity_levels: Vec::new(),
            train_counts: Vec::new(),
            capacity_per_carriage: 1.0,
            stopping_mode: StoppingMode::AllStops,
            optimize_speeds: false,
            search: SearchParams::default(),
            seed: 0,
        }
    }
}

/// One solved (or failed) grid cell.
#[derive(Debug, Clone)]
pub struct ParetoPoint {
    pub capacity_level: f64,
    pub train_count: usize,
    /// Carriages actually fielded across the fleet.
    pub total_carriages: u32,
    /// Horizon-closed average waiting, minutes. NaN when the cell failed.
    pub awt: f64,
    /// Mean served demand, percent.
    pub asd: f64,
    /// Mean load factor, percent.
    pub alf: f64,
    /// Mean vertical load factor, percent.
    pub avlf: f64,
    /// Mean horizontal load factor, percent.
    pub ahlf: f64,
    /// Passengers still waiting when service ends.
    pub leftover: f64,
    /// Index into the sweep's solution list; absent for failed cells.
    pub solution: Option<usize>,
    /// Why the cell failed, when it did.
    pub failed: Option<String>,
    /// Beaten by a cheaper-or-equal point on its own capacity curve.
    pub dominated_in_level: bool,
    /// Beaten by a cheaper-or-equal point anywhere in the sweep.
    pub dominated_overall: bool,
}

impl ParetoPoint {
    /// Stable cell name for files and reports.
    pub fn label(&self, mode: SweepMode) -> String {
        let level = if self.capacity_level.fract() == 0.0 {
            format!("{}", self.capacity_level as i64)
        } else {
            format!("{}", self.capacity_level)
        };
        match mode {
            SweepMode::FixedGlobalCapacity => format!("cap{}-n{}", level, self.train_count),
            SweepMode::FixedPerTrainCapacity => format!("car{}-n{}", level, self.train_count),
        }
    }
}

/// ASD and ALF over the whole grid. Failed cells hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub capacity_levels: Vec<f64>,
    pub train_counts: Vec<usize>,
    /// Served demand percent, indexed `[level][count]`.
    pub asd: Vec<Vec<f64>>,
    /// Load factor percent, indexed `[level][count]`.
    pub alf: Vec<Vec<f64>>,
}

/// Everything a sweep produces. Points are stored level-major, counts
/// ascending within a level.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub mode: SweepMode,
    pub points: Vec<ParetoPoint>,
    pub solutions: Vec<Solution>,
    pub grid: SurfaceGrid,
    pub metrics: Vec<Option<TimetableMetrics>>,
}

impl SweepOutcome {
    /// Points of one capacity curve, in ascending train count.
    pub fn level_points(&self, level_index: usize) -> &[ParetoPoint] {
        let n = self.grid.train_counts.len();
        &self.points[level_index * n..(level_index + 1) * n]
    }

    pub fn failed_cells(&self) -> usize {
        self.points.iter().filter(|p| p.failed.is_some()).count()
    }
}

fn capacity_mode_for(spec: &SweepSpec<'_>, level: f64) -> Result<CapacityMode> {
    match spec.mode {
        SweepMode::FixedGlobalCapacity => Ok(CapacityMode::GlobalCapacity {
            total_capacity: level,
            capacity_per_carriage: spec.capacity_per_carriage,
        }),
        SweepMode::FixedPerTrainCapacity => {
            let rounded = level.round();
            if (level - rounded).abs() > 1e-9 || rounded < 1.0 {
                return Err(Error::invalid(format!(
                    "carriages per train must be a positive whole number, got {}",
                    level
                )));
            }
            Ok(CapacityMode::PerTrainCarriages {
                carriages: rounded as u32,
                capacity_per_carriage: spec.capacity_per_carriage,
            })
        }
    }
}

fn check_spec(spec: &SweepSpec<'_>) -> Result<()> {
    if spec.capacity_levels.is_empty() || spec.train_counts.is_empty() {
        return Err(Error::invalid("sweep needs capacity levels and train counts"));
    }
    if spec
        .capacity_levels
        .iter()
        .any(|&l| !l.is_finite() || l <= 0.0)
    {
        return Err(Error::invalid("capacity levels must be positive"));
    }
    for level in &spec.capacity_levels {
        capacity_mode_for(spec, *level)?;
    }
    // The fleet bound uses the smallest train any policy could field, one
    // carriage, so the same count axis is valid for both modes.
    let bound = train_count_upper_bound(spec.od, spec.line.horizon(), spec.capacity_per_carriage)?;
    for &count in &spec.train_counts {
        if count == 0 {
            return Err(Error::invalid("train counts start at one"));
        }
        if count > bound {
            return Err(Error::invalid(format!(
                "train count {} exceeds the fleet-size bound {}",
                count, bound
            )));
        }
    }
    Ok(())
}

/// Flag points beaten in (train count, waiting) by another point of the
/// same slice. `within_level` restricts comparisons to one capacity curve.
fn mark_dominance(points: &mut [ParetoPoint], counts_per_level: usize, within_level: bool) {
    let solved: Vec<(usize, usize, f64)> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.failed.is_none())
        .map(|(i, p)| (i, p.train_count, p.awt))
        .collect();
    for &(i, count, awt) in &solved {
        let level_of = |idx: usize| idx / counts_per_level;
        let dominated = solved.iter().any(|&(j, c, a)| {
            j != i
                && (!within_level || level_of(j) == level_of(i))
                && c <= count
                && a <= awt
                && (c < count || a < awt)
        });
        if within_level {
            points[i].dominated_in_level = dominated;
        } else {
            points[i].dominated_overall = dominated;
        }
    }
}

/// Solve every cell of the grid. Failed cells are kept and flagged so the
/// grid stays complete.
pub fn sweep(spec: &SweepSpec<'_>) -> Result<SweepOutcome> {
    check_spec(spec)?;
    let mut counts = spec.train_counts.clone();
    counts.sort_unstable();
    counts.dedup();
    let levels = spec.capacity_levels.clone();

    let cells: Vec<(usize, usize)> = (0..levels.len())
        .flat_map(|li| (0..counts.len()).map(move |ci| (li, ci)))
        .collect();

    let solved: Vec<Result<Solution>> = cells
        .par_iter()
        .map(|&(li, ci)| {
            let mode = capacity_mode_for(spec, levels[li])?;
            let mut problem = OptimizationProblem::new(spec.line, spec.od, mode);
            problem.fixed_train_count = Some(counts[ci]);
            problem.stopping_mode = spec.stopping_mode;
            problem.optimize_speeds = spec.optimize_speeds;
            problem.search = spec.search.clone();
            problem.seed = spec.seed;
            solve_with_fixed_structure(&problem, counts[ci], &[])
        })
        .collect();

    let mut points = Vec::with_capacity(cells.len());
    let mut solutions = Vec::new();
    let mut metrics = Vec::with_capacity(cells.len());
    let mut asd = vec![vec![f64::NAN; counts.len()]; levels.len()];
    let mut alf = vec![vec![f64::NAN; counts.len()]; levels.len()];

    for (&(li, ci), outcome) in cells.iter().zip(solved) {
        let level = levels[li];
        let count = counts[ci];
        match outcome {
            Ok(solution) => {
                let gaps = solution.timetable.interdeparture_times();
                let summary = summarize(&solution.flow, spec.line, &solution.awt, &gaps)?;
                let total_carriages: u32 = solution
                    .timetable
                    .trains
                    .iter()
                    .filter(|t| t.active)
                    .map(|t| t.config.carriages)
                    .sum();
                asd[li][ci] = summary.asd;
                alf[li][ci] = summary.alf;
                points.push(ParetoPoint {
                    capacity_level: level,
                    train_count: count,
                    total_carriages,
                    awt: solution.awt.total_awt,
                    asd: summary.asd,
                    alf: summary.alf,
                    avlf: summary.avlf,
                    ahlf: summary.ahlf,
                    leftover: solution.flow.total_leftover(),
                    solution: Some(solutions.len()),
                    failed: None,
                    dominated_in_level: false,
                    dominated_overall: false,
                });
                metrics.push(Some(summary));
                solutions.push(solution);
            }
            Err(err) => {
                points.push(ParetoPoint {
                    capacity_level: level,
                    train_count: count,
                    total_carriages: 0,
                    awt: f64::NAN,
                    asd: f64::NAN,
                    alf: f64::NAN,
                    avlf: f64::NAN,
                    ahlf: f64::NAN,
                    leftover: f64::NAN,
                    solution: None,
                    failed: Some(err.to_string()),
                    dominated_in_level: false,
                    dominated_overall: false,
                });
                metrics.push(None);
            }
        }
    }

    mark_dominance(&mut points, counts.len(), true);
    mark_dominance(&mut points, counts.len(), false);

    Ok(SweepOutcome {
        mode: spec.mode,
        points,
        solutions,
        grid: SurfaceGrid {
            capacity_levels: levels,
            train_counts: counts,
            asd,
            alf,
        },
        metrics,
    })
}

/// Where the served-demand and load-factor surfaces meet.
///
/// Piecewise-linear zero contour of (ASD - ALF) over the grid, vertices in
/// the (capacity level, train count) plane. Squares touching a failed cell
/// are skipped; an empty result means one measure dominates everywhere.
pub fn equilibrium_curve(grid: &SurfaceGrid) -> Vec<Vec<(f64, f64)>> {
    let nl = grid.capacity_levels.len();
    let nc = grid.train_counts.len();
    if nl < 2 || nc < 2 {
        return Vec::new();
    }
    let diff = |li: usize, ci: usize| {
        let d = grid.asd[li][ci] - grid.alf[li][ci];
        // An exact tie sits on the curve; lean positive so the crossing
        // still lands on the shared endpoint.
        if d == 0.0 {
            f64::MIN_POSITIVE
        } else {
            d
        }
    };

    let mut segments: Vec<((f64, f64), (f64, f64))> = Vec::new();
    for li in 0..nl - 1 {
        for ci in 0..nc - 1 {
            let corners = [
                (li, ci),
                (li + 1, ci),
                (li + 1, ci + 1),
                (li, ci + 1),
            ];
            if corners
                .iter()
                .any(|&(l, c)| !(grid.asd[l][c].is_finite() && grid.alf[l][c].is_finite()))
            {
                continue;
            }
            let d = [
                diff(li, ci),
                diff(li + 1, ci),
                diff(li + 1, ci + 1),
                diff(li, ci + 1),
            ];
            let at = |l: usize, c: usize| (grid.capacity_levels[l], grid.train_counts[c] as f64);
            let p = [at(li, ci), at(li + 1, ci), at(li + 1, ci + 1), at(li, ci + 1)];
            let cross = |a: usize, b: usize| {
                let t = d[a] / (d[a] - d[b]);
                (
                    p[a].0 + t * (p[b].0 - p[a].0),
                    p[a].1 + t * (p[b].1 - p[a].1),
                )
            };
            // Edges: 0 bottom (0-1), 1 right (1-2), 2 top (2-3), 3 left (3-0).
            let edge_pairs = [(0usize, 1usize), (1, 2), (2, 3), (3, 0)];
            let mut crossings: Vec<(usize, (f64, f64))> = Vec::new();
            for (e, &(a, b)) in edge_pairs.iter().enumerate() {
                if d[a] * d[b] < 0.0 {
                    crossings.push((e, cross(a, b)));
                }
            }
            match crossings.len() {
                2 => segments.push((crossings[0].1, crossings[1].1)),
                4 => {
                    // Saddle: the center sign picks which diagonal pair
                    // the band joins, the other two corners get isolated
                    // by corner-hugging segments.
                    let center = (d[0] + d[1] + d[2] + d[3]) / 4.0;
                    let band_joins_corner_0 = (center > 0.0) == (d[0] > 0.0);
                    let by_edge = |e: usize| crossings.iter().find(|(ce, _)| *ce == e).unwrap().1;
                    if band_joins_corner_0 {
                        // Corners 1 and 3 are isolated.
                        segments.push((by_edge(0), by_edge(1)));
                        segments.push((by_edge(2), by_edge(3)));
                    } else {
                        // Corners 0 and 2 are isolated.
                        segments.push((by_edge(3), by_edge(0)));
                        segments.push((by_edge(1), by_edge(2)));
                    }
                }
                _ => {}
            }
        }
    }
    stitch(segments)
}

/// Join segments that share endpoints into polylines.
fn stitch(mut segments: Vec<((f64, f64), (f64, f64))>) -> Vec<Vec<(f64, f64)>> {
    const EPS: f64 = 1e-9;
    let close = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() < EPS && (a.1 - b.1).abs() < EPS;
    let mut lines: Vec<Vec<(f64, f64)>> = Vec::new();
    while let Some((a, b)) = segments.pop() {
        let mut line = vec![a, b];
        loop {
            let mut extended = false;
            let mut i = 0;
            while i < segments.len() {
                let (s, e) = segments[i];
                let head = *line.first().expect("line has points");
                let tail = *line.last().expect("line has points");
                if close(s, tail) {
                    line.push(e);
                } else if close(e, tail) {
                    line.push(s);
                } else if close(s, head) {
                    line.insert(0, e);
                } else if close(e, head) {
                    line.insert(0, s);
                } else {
                    i += 1;
                    continue;
                }
                segments.swap_remove(i);
                extended = true;
            }
            if !extended {
                break;
            }
        }
        lines.push(line);
    }
    lines.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .expect("curve vertices are ordered")
            .then(a.len().cmp(&b.len()))
    });
    lines
}
