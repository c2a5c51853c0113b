//! Continuous origin-destination demand.
//!
//! Cumulative demand between a station pair is modelled as a sum of scaled
//! logistic terms. The sum is nondecreasing in time whenever every term has
//! nonnegative weight and steepness, which the constructors enforce, so
//! differences of evaluations can be read directly as passenger counts over
//! an interval.

mod fit;

pub use fit::{fit_od_samples, fit_series, FitDiagnostics, FitOptions, PairFit};

use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Logistic function with exact saturation.
///
/// Evaluates 1/(1+e^-u) without overflow for any finite input. For large
/// |u| the underflow of `exp` yields exactly 0.0 or 1.0, which downstream
/// code relies on when demand windows are fully contained in one interval.
pub fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// One scaled logistic term of a cumulative demand curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidTerm {
    /// Passenger mass carried by this term. Nonnegative.
    pub weight: f64,
    /// Slope parameter. Nonnegative; larger means a sharper arrival burst.
    pub steepness: f64,
    /// Time of the inflection point, minutes.
    pub center: f64,
}

impl SigmoidTerm {
    pub fn new(weight: f64, steepness: f64, center: f64) -> Result<Self> {
        if !(weight.is_finite() && steepness.is_finite() && center.is_finite()) {
            return Err(Error::invalid("sigmoid term parameters must be finite"));
        }
        if weight < 0.0 || steepness < 0.0 || center < 0.0 {
            return Err(Error::invalid(
                "sigmoid term parameters must be nonnegative",
            ));
        }
        Ok(SigmoidTerm {
            weight,
            steepness,
            center,
        })
    }

    /// Cumulative value at time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.weight * logistic(self.steepness * (t - self.center))
    }

    /// Instantaneous arrival rate at time `t`.
    pub fn rate(&self, t: f64) -> f64 {
        let s = logistic(self.steepness * (t - self.center));
        self.weight * self.steepness * s * (1.0 - s)
    }
}

/// Sum of logistic terms: the cumulative demand curve of one station pair.
///
/// An empty sum is the zero curve. Terms are kept sorted by center so that
/// equal curves serialize identically.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SigmoidSum {
    terms: Vec<SigmoidTerm>,
}

impl SigmoidSum {
    pub fn new(mut terms: Vec<SigmoidTerm>) -> Self {
        terms.sort_by(|a, b| {
            (a.center, a.steepness, a.weight)
                .partial_cmp(&(b.center, b.steepness, b.weight))
                .expect("term parameters are finite")
        });
        SigmoidSum { terms }
    }

    pub fn zero() -> Self {
        SigmoidSum::default()
    }

    pub fn terms(&self) -> &[SigmoidTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.weight == 0.0)
    }

    /// Cumulative value at time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    /// Instantaneous arrival rate at time `t`.
    pub fn rate(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.rate(t)).sum()
    }

    /// Passengers arriving in the half-open window `(a, b]`, computed as the
    /// difference of cumulative values. Nonnegative whenever `a <= b`.
    pub fn interval(&self, a: f64, b: f64) -> f64 {
        debug_assert!(a <= b);
        // Sum per-term differences rather than differencing the sums: each
        // term difference is provably nonnegative, so cancellation cannot
        // produce a negative window.
        self.terms
            .iter()
            .map(|term| term.eval(b) - term.eval(a))
            .sum()
    }

    /// Total mass of the curve, the limit at infinite time.
    pub fn total(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// Time within `[lo, hi]` at which the curve reaches the fraction
    /// `frac` of its rise over that window. Bisection; the curve is
    /// monotone so the answer is well defined up to flat stretches.
    pub fn quantile_in(&self, frac: f64, lo: f64, hi: f64) -> f64 {
        let f_lo = self.eval(lo);
        let f_hi = self.eval(hi);
        let target = f_lo + frac.clamp(0.0, 1.0) * (f_hi - f_lo);
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            if b - a < 1e-9 {
                break;
            }
            let mid = 0.5 * (a + b);
            if self.eval(mid) < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }
}

/// Origin-destination demand for a line with stations numbered 1..=n.
///
/// Only forward pairs (origin strictly before destination) carry demand.
/// Pairs without an entry are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OdMatrix {
    n_stations: usize,
    entries: BTreeMap<(usize, usize), SigmoidSum>,
}

impl OdMatrix {
    pub fn new(n_stations: usize) -> Result<Self> {
        if n_stations < 2 {
            return Err(Error::invalid("a line needs at least two stations"));
        }
        Ok(OdMatrix {
            n_stations,
            entries: BTreeMap::new(),
        })
    }

    pub fn n_stations(&self) -> usize {
        self.n_stations
    }

    pub fn set(&mut self, origin: usize, destination: usize, curve: SigmoidSum) -> Result<()> {
        self.check_pair(origin, destination)?;
        if curve.is_zero() {
            self.entries.remove(&(origin, destination));
        } else {
            self.entries.insert((origin, destination), curve);
        }
        Ok(())
    }

    fn check_pair(&self, origin: usize, destination: usize) -> Result<()> {
        if origin < 1 || destination > self.n_stations || origin >= destination {
            return Err(Error::invalid(format!(
                "pair ({origin},{destination}) is not a forward pair on a {}-station line",
                self.n_stations
            )));
        }
        Ok(())
    }

    pub fn get(&self, origin: usize, destination: usize) -> Option<&SigmoidSum> {
        self.entries.get(&(origin, destination))
    }

    /// Iterate non-zero pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, &SigmoidSum)> {
        self.entries.iter().map(|(&(i, j), s)| (i, j, s))
    }

    pub fn n_pairs(&self) -> usize {
        self.entries.len()
    }

    /// Passengers of one pair arriving in `(a, b]`.
    pub fn demand_between(&self, origin: usize, destination: usize, a: f64, b: f64) -> f64 {
        self.get(origin, destination)
            .map_or(0.0, |s| s.interval(a, b))
    }

    /// All passengers arriving in `(a, b]`, summed over pairs.
    pub fn total_over(&self, a: f64, b: f64) -> f64 {
        self.entries.values().map(|s| s.interval(a, b)).sum()
    }

    /// Passengers arriving at `origin` in `(a, b]`, summed over destinations.
    pub fn boarding_at(&self, origin: usize, a: f64, b: f64) -> f64 {
        self.entries
            .iter()
            .filter(|(&(i, _), _)| i == origin)
            .map(|(_, s)| s.interval(a, b))
            .sum()
    }

    /// Largest demand over `(a, b]` crossing any single inter-station cut.
    ///
    /// The cut after station c is crossed by every pair with origin at or
    /// before c and destination after c. Every passenger must ride across
    /// the cuts between their origin and destination, so total capacity on
    /// offer has to cover the largest cut.
    pub fn max_cut_demand(&self, a: f64, b: f64) -> f64 {
        let mut best = 0.0f64;
        for cut in 1..self.n_stations {
            let crossing: f64 = self
                .entries
                .iter()
                .filter(|(&(i, j), _)| i <= cut && j > cut)
                .map(|(_, s)| s.interval(a, b))
                .sum();
            best = best.max(crossing);
        }
        best
    }
}

/// Observed cumulative counts for one station pair, used for fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SampleSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid("sample times and values differ in length"));
        }
        if times.len() < 2 {
            return Err(Error::invalid("a sample series needs at least two points"));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid("sample times must be strictly increasing"));
            }
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("samples must be finite"));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("cumulative counts cannot be negative"));
        }
        Ok(SampleSeries { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }
}
