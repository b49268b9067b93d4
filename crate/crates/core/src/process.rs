//! The two marked Poisson decision parameters and their delayed-renewal
//! observation process.
//!
//! Window `0` is `[0, tau_0]`; window `k >= 1` is `(tau_{k-1}, tau_k]`. Both
//! parameters accrue over the same windows, so their increments are dependent
//! through the shared window length.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TruncatedSeries;

/// Distribution of the nonnegative integer mark carried by each arrival.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarkDist {
    /// Every arrival adds one (counting process).
    #[default]
    Unit,
    /// Every arrival adds `size`.
    Fixed { size: u32 },
    /// Geometric on `{1, 2, ...}` with success probability `p`.
    Geometric { p: f64 },
}

impl MarkDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MarkDist::Geometric { p } if !(p > 0.0 && p <= 1.0) => Err(Error::InvalidParameter(
                format!("geometric mark probability must lie in (0, 1], got {p}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            MarkDist::Unit => 1.0,
            MarkDist::Fixed { size } => f64::from(size),
            MarkDist::Geometric { p } => 1.0 / p,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            MarkDist::Unit => 1.0,
            MarkDist::Fixed { size } => f64::from(size).powi(2),
            MarkDist::Geometric { p } => (2.0 - p) / (p * p),
        }
    }

    /// Probability generating function `h(z) = E[z^mark]`.
    pub fn pgf(&self, z: f64) -> f64 {
        match *self {
            MarkDist::Unit => z,
            MarkDist::Fixed { size } => z.powi(size as i32),
            MarkDist::Geometric { p } => p * z / (1.0 - (1.0 - p) * z),
        }
    }

    /// `h(x)` as a series of the given order.
    pub fn pgf_series(&self, order: usize) -> TruncatedSeries {
        match *self {
            MarkDist::Unit => TruncatedSeries::variable(order),
            MarkDist::Fixed { size } => TruncatedSeries::monomial(size as usize, 1.0, order),
            MarkDist::Geometric { p } => {
                let mut c = vec![0.0; order + 1];
                let mut term = p;
                for coeff in c.iter_mut().skip(1) {
                    *coeff = term;
                    term *= 1.0 - p;
                }
                TruncatedSeries::new(c)
            }
        }
    }

    fn sample_sum<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> u64 {
        match *self {
            MarkDist::Unit => count,
            MarkDist::Fixed { size } => count * u64::from(size),
            MarkDist::Geometric { p } => {
                if p >= 1.0 {
                    return count;
                }
                let geo = Geometric::new(p).expect("validated probability");
                (0..count).map(|_| 1 + geo.sample(rng)).sum()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalFamily {
    Exponential,
    Deterministic,
}

impl IntervalFamily {
    pub fn is_memoryless(self) -> bool {
        matches!(self, IntervalFamily::Exponential)
    }
}

impl std::fmt::Display for IntervalFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IntervalFamily::Exponential => f.write_str("exponential"),
            IntervalFamily::Deterministic => f.write_str("deterministic"),
        }
    }
}

/// Law of an observation interval: a family and its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalDist {
    pub family: IntervalFamily,
    pub mean: f64,
}

impl IntervalDist {
    pub fn new(family: IntervalFamily, mean: f64) -> Self {
        Self { family, mean }
    }

    pub fn exponential(mean: f64) -> Self {
        Self::new(IntervalFamily::Exponential, mean)
    }

    pub fn deterministic(mean: f64) -> Self {
        Self::new(IntervalFamily::Deterministic, mean)
    }

    pub fn variance(&self) -> f64 {
        match self.family {
            IntervalFamily::Exponential => self.mean * self.mean,
            IntervalFamily::Deterministic => 0.0,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            IntervalFamily::Exponential => {
                Exp::new(1.0 / self.mean).expect("validated mean").sample(rng)
            }
            IntervalFamily::Deterministic => self.mean,
        }
    }
}

/// Intensities, mark laws and observation laws of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub marks_a: MarkDist,
    pub marks_b: MarkDist,
    /// Law of `tau_0`.
    pub initial: IntervalDist,
    /// Law of `Delta_k`, `k >= 1`.
    pub interval: IntervalDist,
}

impl ModelParams {
    /// Unit marks and one interval family for both the initial and the
    /// subsequent observation intervals.
    pub fn unit_marks(
        lambda_a: f64,
        lambda_b: f64,
        family: IntervalFamily,
        initial_mean: f64,
        interval_mean: f64,
    ) -> Self {
        Self {
            lambda_a,
            lambda_b,
            marks_a: MarkDist::Unit,
            marks_b: MarkDist::Unit,
            initial: IntervalDist::new(family, initial_mean),
            interval: IntervalDist::new(family, interval_mean),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_a", self.lambda_a), ("lambda_b", self.lambda_b)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("initial mean", self.initial.mean),
            ("interval mean", self.interval.mean),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        self.marks_a.validate()?;
        self.marks_b.validate()
    }

    /// Mean of `tau_0`.
    pub fn delta0_mean(&self) -> f64 {
        self.initial.mean
    }

    /// Mean of `Delta_1`.
    pub fn delta_mean(&self) -> f64 {
        self.interval.mean
    }

    /// True when both the initial and the subsequent intervals are exponential.
    pub fn is_memoryless(&self) -> bool {
        self.initial.family.is_memoryless() && self.interval.family.is_memoryless()
    }
}

/// Exceedance levels `m` (for A) and `n` (for B).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub m: u64,
    pub n: u64,
}

impl Thresholds {
    pub fn new(m: u64, n: u64) -> Self {
        Self { m, n }
    }
}

/// One realised trajectory over `epochs.len()` observation epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub epochs: Vec<f64>,
    pub increments_a: Vec<u64>,
    pub increments_b: Vec<u64>,
    pub cumulative_a: Vec<u64>,
    pub cumulative_b: Vec<u64>,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    /// Builds a path from per-window data (`durations[0]` is `tau_0`).
    pub fn from_windows(windows: &[Window]) -> Self {
        let mut path = SamplePath {
            epochs: Vec::with_capacity(windows.len()),
            increments_a: Vec::with_capacity(windows.len()),
            increments_b: Vec::with_capacity(windows.len()),
            cumulative_a: Vec::with_capacity(windows.len()),
            cumulative_b: Vec::with_capacity(windows.len()),
        };
        let (mut t, mut ca, mut cb) = (0.0, 0u64, 0u64);
        for w in windows {
            t += w.duration;
            ca += w.a;
            cb += w.b;
            path.epochs.push(t);
            path.increments_a.push(w.a);
            path.increments_b.push(w.b);
            path.cumulative_a.push(ca);
            path.cumulative_b.push(cb);
        }
        path
    }
}

/// Exit indices and associated epochs/levels for one path.
///
/// `tau_mu_prev` is `tau_{mu-1}`, taken as `0` when `mu = 0`. On a censored
/// axis the index is the last observed one and the epoch fields are `NaN`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitRecord {
    pub mu: usize,
    pub nu: usize,
    pub tau_mu_prev: f64,
    pub tau_mu: f64,
    pub tau_nu_prev: f64,
    pub tau_nu: f64,
    pub level_at_mu: u64,
    pub level_at_nu: u64,
    pub censored_a: bool,
    pub censored_b: bool,
}

impl ExitRecord {
    pub fn is_censored(&self) -> bool {
        self.censored_a || self.censored_b
    }
}

/// Per-interval moments of the increments `(a_k, b_k)`, `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementMoments {
    pub mean_a: f64,
    pub mean_b: f64,
    pub var_a: f64,
    pub var_b: f64,
    pub covariance: f64,
}

/// One observation window: its length and the marks accrued by A and B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub duration: f64,
    pub a: u64,
    pub b: u64,
}

/// Sequential window generator. The first window drawn is `[0, tau_0]`.
///
/// Each window draws its length first, then conditionally independent
/// Poisson counts for A and B and the sum of that many marks.
pub struct WindowSampler<R> {
    params: ModelParams,
    rng: R,
    started: bool,
}

impl<R: Rng> WindowSampler<R> {
    pub fn new(params: ModelParams, rng: R) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            rng,
            started: false,
        })
    }

    pub fn next_window(&mut self) -> Window {
        let dist = if self.started {
            self.params.interval
        } else {
            self.params.initial
        };
        self.started = true;
        let duration = dist.sample(&mut self.rng);
        let a = self.accrue(self.params.lambda_a, self.params.marks_a, duration);
        let b = self.accrue(self.params.lambda_b, self.params.marks_b, duration);
        Window { duration, a, b }
    }

    fn accrue(&mut self, lambda: f64, marks: MarkDist, duration: f64) -> u64 {
        let rate = lambda * duration;
        if rate <= 0.0 {
            return 0;
        }
        let count = Poisson::new(rate).expect("positive finite rate").sample(&mut self.rng) as u64;
        marks.sample_sum(count, &mut self.rng)
    }
}

/// Deterministic generator for path `index` of a run seeded with `seed`.
/// Paths of one run use disjoint ChaCha streams.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Generates a path with exactly `max_observations + 1` epochs.
pub fn sample_path(params: &ModelParams, seed: u64, max_observations: usize) -> Result<SamplePath> {
    if max_observations < 1 {
        return Err(Error::InvalidParameter(
            "max_observations must be at least 1".into(),
        ));
    }
    let mut sampler = WindowSampler::new(*params, ChaCha8Rng::seed_from_u64(seed))?;
    let windows: Vec<Window> = (0..=max_observations).map(|_| sampler.next_window()).collect();
    Ok(SamplePath::from_windows(&windows))
}

/// First index at which a cumulative level reaches `threshold`.
fn first_reach(cumulative: &[u64], threshold: u64) -> Option<usize> {
    cumulative.iter().position(|&level| level >= threshold)
}

/// Scans a path for the exit indices `mu`, `nu` (first index with level `>=`
/// threshold).
pub fn exit_indices(path: &SamplePath, thresholds: Thresholds) -> ExitRecord {
    let last = path.len().saturating_sub(1);
    let axis = |cumulative: &[u64], threshold: u64| match first_reach(cumulative, threshold) {
        Some(i) => {
            let prev = if i == 0 { 0.0 } else { path.epochs[i - 1] };
            (i, prev, path.epochs[i], cumulative[i], false)
        }
        None => (last, f64::NAN, f64::NAN, cumulative.get(last).copied().unwrap_or(0), true),
    };
    let (mu, tau_mu_prev, tau_mu, level_at_mu, censored_a) = axis(&path.cumulative_a, thresholds.m);
    let (nu, tau_nu_prev, tau_nu, level_at_nu, censored_b) = axis(&path.cumulative_b, thresholds.n);
    ExitRecord {
        mu,
        nu,
        tau_mu_prev,
        tau_mu,
        tau_nu_prev,
        tau_nu,
        level_at_mu,
        level_at_nu,
        censored_a,
        censored_b,
    }
}

/// Simulates windows until both axes have exceeded their levels or the
/// horizon (`horizon + 1` observations) is exhausted. Equivalent in
/// distribution to `exit_indices(sample_path(..))` without storing the path.
pub fn simulate_exit<R: Rng>(
    sampler: &mut WindowSampler<R>,
    thresholds: Thresholds,
    horizon: usize,
) -> ExitRecord {
    #[derive(Clone, Copy)]
    struct Track {
        exit: Option<(usize, f64, f64, u64)>,
        level: u64,
    }
    let mut a = Track { exit: None, level: 0 };
    let mut b = Track { exit: None, level: 0 };
    let mut t = 0.0;
    for k in 0..=horizon {
        let w = sampler.next_window();
        let prev = t;
        t += w.duration;
        for (track, inc, thr) in [(&mut a, w.a, thresholds.m), (&mut b, w.b, thresholds.n)] {
            if track.exit.is_none() {
                track.level += inc;
                if track.level >= thr {
                    track.exit = Some((k, prev, t, track.level));
                }
            }
        }
        if a.exit.is_some() && b.exit.is_some() {
            break;
        }
    }
    let unpack = |tr: Track| match tr.exit {
        Some((i, p, e, l)) => (i, p, e, l, false),
        None => (horizon, f64::NAN, f64::NAN, tr.level, true),
    };
    let (mu, tau_mu_prev, tau_mu, level_at_mu, censored_a) = unpack(a);
    let (nu, tau_nu_prev, tau_nu, level_at_nu, censored_b) = unpack(b);
    ExitRecord {
        mu,
        nu,
        tau_mu_prev,
        tau_mu,
        tau_nu_prev,
        tau_nu,
        level_at_mu,
        level_at_nu,
        censored_a,
        censored_b,
    }
}

/// Closed-form moments of `(a_k, b_k)` by the laws of total expectation and
/// covariance, conditioning on the window length.
pub fn increment_moments(params: &ModelParams) -> Result<IncrementMoments> {
    params.validate()?;
    let d = params.interval.mean;
    let var_d = params.interval.variance();
    let (ma, mb) = (
        params.lambda_a * params.marks_a.mean(),
        params.lambda_b * params.marks_b.mean(),
    );
    Ok(IncrementMoments {
        mean_a: ma * d,
        mean_b: mb * d,
        var_a: params.lambda_a * params.marks_a.second_moment() * d + ma * ma * var_d,
        var_b: params.lambda_b * params.marks_b.second_moment() * d + mb * mb * var_d,
        covariance: ma * mb * var_d,
    })
}
