//! Constrained least-squares fitting of cumulative demand curves.
//!
//! The model for one station pair is a sum of scaled logistic terms. All
//! parameters are kept nonnegative and the summed weights may not exceed
//! the largest observed count, so a fitted curve is always a valid
//! cumulative demand curve. Optimization is damped Gauss-Newton with
//! projection onto the feasible set, run from several seeded starts; the
//! number of terms grows until the extra term stops paying for itself.

use super::{logistic, OdMatrix, SampleSeries, SigmoidSum, SigmoidTerm};
use crate::error::Result;
use crate::util::mix_seed;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Largest number of logistic terms to try.
    pub max_terms: usize,
    /// Seeded starts per term count.
    pub starts: usize,
    /// Iteration cap per start.
    pub max_iterations: usize,
    /// Stationarity threshold on the projected gradient, scaled by 1 + SSE.
    pub gradient_tol: f64,
    /// Minimum relative SSE improvement required to accept a larger term
    /// count.
    pub improvement_ratio: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_terms: 6,
            starts: 8,
            max_iterations: 500,
            gradient_tol: 1e-6,
            improvement_ratio: 0.05,
            seed: 0,
        }
    }
}

/// Outcome of fitting one series.
#[derive(Debug, Clone)]
pub struct FitDiagnostics {
    pub n_terms: usize,
    pub sse: f64,
    pub rmse: f64,
    pub n_samples: usize,
    /// Best SSE reached for each tried term count, starting at one term.
    pub sse_by_terms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fitted curve for one station pair.
#[derive(Debug, Clone)]
pub struct PairFit {
    pub origin: usize,
    pub destination: usize,
    pub curve: SigmoidSum,
    pub diagnostics: FitDiagnostics,
}

/// Parameter vector layout: [weight, steepness, center] per term.
const PER_TERM: usize = 3;

struct Objective<'a> {
    t: &'a [f64],
    y: &'a [f64],
    /// Upper bound on the summed weights.
    cap: f64,
}

impl Objective<'_> {
    fn n_terms(&self, theta: &[f64]) -> usize {
        theta.len() / PER_TERM
    }

    /// Clamp parameters into the feasible set. Weight overflow above the
    /// cap is resolved by scaling every weight down uniformly, which keeps
    /// the relative shape of the mixture.
    fn project(&self, theta: &mut [f64]) {
        for v in theta.iter_mut() {
            if !v.is_finite() {
                *v = 0.0;
            }
            *v = v.max(0.0);
        }
        for r in 0..self.n_terms(theta) {
            let b = &mut theta[r * PER_TERM + 1];
            *b = b.min(1e6);
        }
        let total: f64 = (0..self.n_terms(theta))
            .map(|r| theta[r * PER_TERM])
            .sum();
        if total > self.cap && total > 0.0 {
            let scale = self.cap / total;
            for r in 0..self.n_terms(theta) {
                theta[r * PER_TERM] *= scale;
            }
        }
    }

    fn model(&self, theta: &[f64], t: f64) -> f64 {
        (0..self.n_terms(theta))
            .map(|r| {
                let k = theta[r * PER_TERM];
                let b = theta[r * PER_TERM + 1];
                let x = theta[r * PER_TERM + 2];
                k * logistic(b * (t - x))
            })
            .sum()
    }

    fn sse(&self, theta: &[f64]) -> f64 {
        self.t
            .iter()
            .zip(self.y)
            .map(|(&t, &y)| {
                let e = self.model(theta, t) - y;
                e * e
            })
            .sum()
    }

    /// Residual vector and Jacobian of residuals at `theta`.
    fn residuals_jacobian(&self, theta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.t.len();
        let p = theta.len();
        let mut res = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, p);
        for (row, (&t, &y)) in self.t.iter().zip(self.y).enumerate() {
            let mut value = 0.0;
            for r in 0..self.n_terms(theta) {
                let k = theta[r * PER_TERM];
                let b = theta[r * PER_TERM + 1];
                let x = theta[r * PER_TERM + 2];
                let s = logistic(b * (t - x));
                let ds = s * (1.0 - s);
                value += k * s;
                jac[(row, r * PER_TERM)] = s;
                jac[(row, r * PER_TERM + 1)] = k * ds * (t - x);
                jac[(row, r * PER_TERM + 2)] = -k * b * ds;
            }
            res[row] = value - y;
        }
        (res, jac)
    }
}

struct LmOutcome {
    theta: Vec<f64>,
    sse: f64,
    iterations: usize,
    converged: bool,
}

/// Damped Gauss-Newton descent with feasibility projection.
fn lm_descend(obj: &Objective, start: &[f64], opts: &FitOptions) -> LmOutcome {
    let mut theta = start.to_vec();
    obj.project(&mut theta);
    let mut sse = obj.sse(&theta);
    let mut lambda = 1e-3;
    let mut flat_steps = 0;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let (res, jac) = obj.residuals_jacobian(&theta);
        let grad = jac.transpose() * &res;

        if projected_gradient_norm(obj, &theta, grad.as_slice()) < opts.gradient_tol * (1.0 + sse)
        {
            return LmOutcome {
                theta,
                sse,
                iterations,
                converged: true,
            };
        }

        let normal = jac.transpose() * &jac;
        let mut accepted = false;
        for _ in 0..30 {
            let mut damped = normal.clone();
            for i in 0..damped.nrows() {
                let d = damped[(i, i)];
                damped[(i, i)] = d + lambda * d.max(1e-10);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    lambda *= 4.0;
                    continue;
                }
            };
            let mut candidate = theta.clone();
            for (c, s) in candidate.iter_mut().zip(step.iter()) {
                *c += s;
            }
            obj.project(&mut candidate);
            let candidate_sse = obj.sse(&candidate);
            if candidate_sse < sse {
                if sse - candidate_sse < 1e-14 * (1.0 + sse) {
                    flat_steps += 1;
                } else {
                    flat_steps = 0;
                }
                theta = candidate;
                sse = candidate_sse;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted || flat_steps >= 3 {
            let converged = flat_steps >= 3;
            return LmOutcome {
                theta,
                sse,
                iterations,
                converged,
            };
        }
    }
    LmOutcome {
        theta,
        sse,
        iterations,
        converged: false,
    }
}

/// Infinity norm of the gradient with blocked components removed: a
/// component pinned at zero whose descent direction points outside the
/// feasible set carries no usable slope, and neither does a uniform
/// weight increase when the weight cap is active.
fn projected_gradient_norm(obj: &Objective, theta: &[f64], grad: &[f64]) -> f64 {
    let n_terms = theta.len() / PER_TERM;
    let mut pg: Vec<f64> = grad.to_vec();
    for (i, (&v, g)) in theta.iter().zip(pg.iter_mut()).enumerate() {
        let _ = i;
        if v <= 0.0 && *g > 0.0 {
            *g = 0.0;
        }
    }
    let total: f64 = (0..n_terms).map(|r| theta[r * PER_TERM]).sum();
    if total >= obj.cap * (1.0 - 1e-12) && obj.cap > 0.0 {
        let mean: f64 =
            (0..n_terms).map(|r| pg[r * PER_TERM]).sum::<f64>() / n_terms as f64;
        // Descent pushes the weight total outward only when the mean weight
        // gradient is negative.
        if mean < 0.0 {
            for r in 0..n_terms {
                pg[r * PER_TERM] -= mean;
            }
        }
    }
    pg.iter().fold(0.0f64, |m, g| m.max(g.abs()))
}

/// Slope estimates between consecutive samples, lightly smoothed.
fn sample_slopes(series: &SampleSeries) -> Vec<(f64, f64)> {
    let t = series.times();
    let y = series.values();
    let raw: Vec<(f64, f64)> = t
        .windows(2)
        .zip(y.windows(2))
        .map(|(tw, yw)| (0.5 * (tw[0] + tw[1]), (yw[1] - yw[0]) / (tw[1] - tw[0])))
        .collect();
    let n = raw.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            let avg = raw[lo..=hi].iter().map(|&(_, d)| d).sum::<f64>() / (hi - lo + 1) as f64;
            (raw[i].0, avg)
        })
        .collect()
}

/// Linear interpolation of the sample curve at `t`.
fn sample_value_at(series: &SampleSeries, t: f64) -> f64 {
    let ts = series.times();
    let ys = series.values();
    if t <= ts[0] {
        return ys[0];
    }
    if t >= ts[ts.len() - 1] {
        return ys[ys.len() - 1];
    }
    let idx = ts.partition_point(|&v| v < t);
    let (t0, t1) = (ts[idx - 1], ts[idx]);
    let (y0, y1) = (ys[idx - 1], ys[idx]);
    y0 + (y1 - y0) * (t - t0) / (t1 - t0)
}

/// Build a seed parameter vector with `m` terms placed at the strongest
/// slope peaks, with weights set from the cumulative rise around each
/// peak and steepness from the observed peak slope.
fn seed_parameters(series: &SampleSeries, m: usize) -> Vec<f64> {
    let slopes = sample_slopes(series);
    let (t_first, t_last) = series.span();
    let span = (t_last - t_first).max(1e-9);
    let min_separation = span / (2.0 * m as f64 + 2.0);

    let mut order: Vec<usize> = (0..slopes.len()).collect();
    order.sort_by(|&a, &b| {
        slopes[b]
            .1
            .partial_cmp(&slopes[a].1)
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut centers: Vec<f64> = Vec::new();
    for idx in order {
        let t = slopes[idx].0;
        if centers.iter().all(|&c| (c - t).abs() >= min_separation) {
            centers.push(t);
            if centers.len() == m {
                break;
            }
        }
    }
    // Not enough distinct peaks: spread the remainder evenly.
    let mut fill = 1;
    while centers.len() < m {
        let t = t_first + span * fill as f64 / (m + 1) as f64;
        if centers.iter().all(|&c| (c - t).abs() >= min_separation / 2.0) {
            centers.push(t);
        }
        fill += 1;
        if fill > 4 * m {
            centers.push(t_first + span * 0.5);
        }
    }
    centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
    centers.truncate(m);

    let y_max = series.max_value();
    let mut theta = Vec::with_capacity(m * PER_TERM);
    for (r, &center) in centers.iter().enumerate() {
        let left = if r == 0 {
            f64::NEG_INFINITY
        } else {
            0.5 * (centers[r - 1] + center)
        };
        let right = if r + 1 == m {
            f64::INFINITY
        } else {
            0.5 * (center + centers[r + 1])
        };
        let rise = sample_value_at(series, right.min(t_last))
            - if left.is_finite() {
                sample_value_at(series, left)
            } else {
                0.0
            };
        let weight = rise.max(y_max / (10.0 * m as f64)).max(1e-9);
        let peak_slope = slopes
            .iter()
            .filter(|&&(t, _)| t >= left && t <= right)
            .map(|&(_, d)| d)
            .fold(0.0f64, f64::max);
        // Peak slope of one term is weight * steepness / 4.
        let steepness = (4.0 * peak_slope / weight).clamp(1e-4, 32.0);
        theta.extend_from_slice(&[weight, steepness, center.max(0.0)]);
    }
    theta
}

fn jitter(theta: &[f64], span: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    theta
        .chunks(PER_TERM)
        .flat_map(|c| {
            let k = c[0] * (rng.gen_range(-0.25..0.25f64)).exp();
            let b = c[1] * (rng.gen_range(-0.6..0.6f64)).exp();
            let x = c[2] + rng.gen_range(-1.0..1.0) * span / 20.0;
            [k, b, x]
        })
        .collect()
}

fn theta_to_sum(theta: &[f64], weight_floor: f64) -> SigmoidSum {
    let terms: Vec<SigmoidTerm> = theta
        .chunks(PER_TERM)
        .filter(|c| c[0] > weight_floor)
        .map(|c| SigmoidTerm::new(c[0], c[1], c[2]).expect("projected parameters are feasible"))
        .collect();
    SigmoidSum::new(terms)
}

/// Fit one cumulative series. The term count starts at one and grows while
/// each extra term improves SSE by at least the configured ratio; the last
/// count before the improvement stalls is kept.
pub fn fit_series(series: &SampleSeries, opts: &FitOptions) -> (SigmoidSum, FitDiagnostics) {
    let y_max = series.max_value();
    let n = series.len();
    if y_max <= 0.0 {
        return (
            SigmoidSum::zero(),
            FitDiagnostics {
                n_terms: 0,
                sse: 0.0,
                rmse: 0.0,
                n_samples: n,
                sse_by_terms: vec![],
                iterations: 0,
                converged: true,
            },
        );
    }

    let obj = Objective {
        t: series.times(),
        y: series.values(),
        cap: y_max,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (t_first, t_last) = series.span();
    let span = (t_last - t_first).max(1e-9);
    let perfect = 1e-16 * n as f64 * y_max * y_max;

    let mut best: Option<LmOutcome> = None;
    let mut sse_by_terms = Vec::new();

    for m in 1..=opts.max_terms {
        if n < PER_TERM * m + 1 {
            break;
        }
        let base = seed_parameters(series, m);
        let mut best_m: Option<LmOutcome> = None;
        for start in 0..opts.starts {
            let theta0 = if start == 0 {
                base.clone()
            } else {
                jitter(&base, span, &mut rng)
            };
            let outcome = lm_descend(&obj, &theta0, opts);
            let better = match &best_m {
                None => true,
                Some(b) => outcome.sse < b.sse,
            };
            if better {
                best_m = Some(outcome);
            }
        }
        let best_m = best_m.expect("at least one start");
        sse_by_terms.push(best_m.sse);

        let keep_growing = match &best {
            None => true,
            Some(prev) => best_m.sse < (1.0 - opts.improvement_ratio) * prev.sse,
        };
        if keep_growing {
            let done = best_m.sse <= perfect;
            best = Some(best_m);
            if done {
                break;
            }
        } else {
            break;
        }
    }

    let best = best.expect("term search starts at one term");
    let curve = theta_to_sum(&best.theta, 1e-9 * y_max);
    let rmse = (best.sse / n as f64).sqrt();
    let diagnostics = FitDiagnostics {
        n_terms: curve.terms().len(),
        sse: best.sse,
        rmse,
        n_samples: n,
        sse_by_terms,
        iterations: best.iterations,
        converged: best.converged,
    };
    (curve, diagnostics)
}

/// Fit every sampled pair and assemble the demand matrix. Pairs are fitted
/// independently and in parallel; the per-pair seed depends only on the
/// base seed and the pair, so results do not depend on scheduling.
pub fn fit_od_samples(
    samples: &BTreeMap<(usize, usize), SampleSeries>,
    n_stations: usize,
    opts: &FitOptions,
) -> Result<(OdMatrix, Vec<PairFit>)> {
    let mut od = OdMatrix::new(n_stations)?;
    for &(i, j) in samples.keys() {
        // Surface pair range errors before spending time on fits.
        od.set(i, j, SigmoidSum::zero())?;
        let _ = (i, j);
    }
    let ordered: Vec<(&(usize, usize), &SampleSeries)> = samples.iter().collect();
    let fits: Vec<PairFit> = ordered
        .par_iter()
        .map(|(&(origin, destination), series)| {
            let pair_opts = FitOptions {
                seed: mix_seed(opts.seed, origin as u64, destination as u64),
                ..opts.clone()
            };
            let (curve, diagnostics) = fit_series(series, &pair_opts);
            PairFit {
                origin,
                destination,
                curve,
                diagnostics,
            }
        })
        .collect();
    for fit in &fits {
        od.set(fit.origin, fit.destination, fit.curve.clone())?;
    }
    Ok((od, fits))
}
