//! Brute-force Monte Carlo estimates of the exit indices, shift epochs and the
//! joint functional, and the conformance table that sets them against the
//! closed forms.
//!
//! Paths are generated from per-path ChaCha streams and collected in path
//! order, so every estimate is a deterministic function of `(params,
//! thresholds, paths, seed, horizon)` regardless of thread scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{analytic_value, AnalyticStatus, AnalyticValue, Quantity};
use crate::error::{Axis, Error, Result};
use crate::process::{path_rng, simulate_exit, ExitRecord, ModelParams, SamplePath, Thresholds, WindowSampler};
use crate::transform::TransformContext;

pub const DEFAULT_HORIZON: usize = 10_000;

/// Largest tolerated fraction of censored paths.
pub const MAX_CENSORED_FRACTION: f64 = 1e-3;

/// Matches within this many standard errors are verdict `match`.
pub const MATCH_SE_MULTIPLE: f64 = 3.0;

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub paths: u64,
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

impl McConfig {
    pub fn new(paths: u64, seed: u64) -> Self {
        Self {
            paths,
            seed,
            horizon: DEFAULT_HORIZON,
        }
    }
}

/// Exit records of a batch of simulated paths, in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitBatch {
    pub records: Vec<ExitRecord>,
    pub censored_a: u64,
    pub censored_b: u64,
    pub censored_any: u64,
}

impl ExitBatch {
    pub fn total(&self) -> u64 {
        self.records.len() as u64
    }
}

fn censor_budget(paths: u64) -> u64 {
    (paths as f64 * MAX_CENSORED_FRACTION).floor() as u64
}

/// Simulates `mc.paths` paths and extracts their exit records.
///
/// Fails with [`Error::Horizon`] as soon as the number of censored paths
/// exceeds `MAX_CENSORED_FRACTION` of the run.
pub fn simulate_exits(params: &ModelParams, thresholds: Thresholds, mc: &McConfig) -> Result<ExitBatch> {
    params.validate()?;
    if mc.paths == 0 {
        return Err(Error::InvalidParameter("path count must be at least 1".into()));
    }
    let budget = censor_budget(mc.paths);
    let horizon_error = |censored| Error::Horizon {
        censored,
        total: mc.paths,
        horizon: mc.horizon,
    };
    // An axis without arrivals and a positive level can never exit.
    let stuck = (params.lambda_a == 0.0 && thresholds.m > 0) || (params.lambda_b == 0.0 && thresholds.n > 0);
    if stuck && mc.paths > budget {
        return Err(horizon_error(mc.paths));
    }

    let mut batch = ExitBatch {
        records: Vec::with_capacity(mc.paths as usize),
        censored_a: 0,
        censored_b: 0,
        censored_any: 0,
    };
    let mut start = 0;
    while start < mc.paths {
        let end = (start + CHUNK).min(mc.paths);
        let chunk: Vec<ExitRecord> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut sampler = WindowSampler::new(*params, path_rng(mc.seed, i)).expect("validated");
                simulate_exit(&mut sampler, thresholds, mc.horizon)
            })
            .collect();
        for r in &chunk {
            batch.censored_a += u64::from(r.censored_a);
            batch.censored_b += u64::from(r.censored_b);
            batch.censored_any += u64::from(r.is_censored());
        }
        if batch.censored_any > budget {
            return Err(horizon_error(batch.censored_any));
        }
        batch.records.extend(chunk);
        start = end;
    }
    Ok(batch)
}

/// Point estimate with its standard error over `n` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: u64,
}

/// Sample mean and `stdev / sqrt(n)` (unbiased variance), two-pass.
pub fn mean_estimate(samples: impl Iterator<Item = f64> + Clone) -> Result<Estimate> {
    let (n, sum) = samples.clone().fold((0u64, 0.0), |(n, s), x| (n + 1, s + x));
    if n == 0 {
        return Err(Error::NoData);
    }
    let mean = sum / n as f64;
    if n == 1 {
        return Ok(Estimate { value: mean, se: 0.0, n });
    }
    let ss: f64 = samples.map(|x| (x - mean) * (x - mean)).sum();
    let var = ss / (n - 1) as f64;
    Ok(Estimate {
        value: mean,
        se: (var / n as f64).sqrt(),
        n,
    })
}

/// Sample moments of one simulated quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
    pub n: u64,
}

impl From<Estimate> for Moments {
    fn from(e: Estimate) -> Self {
        Moments {
            mean: e.value,
            variance: e.se * e.se * e.n as f64,
            se: e.se,
            n: e.n,
        }
    }
}

/// Empirical distribution of the exit indices and moments of the shift
/// epochs. Histogram entry `j` counts uncensored paths with index `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalExitSummary {
    pub paths: u64,
    pub censored_a: u64,
    pub censored_b: u64,
    pub histogram_mu: Vec<u64>,
    pub histogram_nu: Vec<u64>,
    pub mu: Moments,
    pub nu: Moments,
    pub tau_mu: Moments,
    pub tau_nu: Moments,
    pub tau_mu_prev: Moments,
    pub tau_nu_prev: Moments,
}

fn histogram(indices: impl Iterator<Item = usize>) -> Vec<u64> {
    let mut h: Vec<u64> = Vec::new();
    for i in indices {
        if i >= h.len() {
            h.resize(i + 1, 0);
        }
        h[i] += 1;
    }
    h
}

impl EmpiricalExitSummary {
    pub fn from_batch(batch: &ExitBatch) -> Result<Self> {
        let a = || batch.records.iter().filter(|r| !r.censored_a);
        let b = || batch.records.iter().filter(|r| !r.censored_b);
        Ok(Self {
            paths: batch.total(),
            censored_a: batch.censored_a,
            censored_b: batch.censored_b,
            histogram_mu: histogram(a().map(|r| r.mu)),
            histogram_nu: histogram(b().map(|r| r.nu)),
            mu: mean_estimate(a().map(|r| r.mu as f64))?.into(),
            nu: mean_estimate(b().map(|r| r.nu as f64))?.into(),
            tau_mu: mean_estimate(a().map(|r| r.tau_mu))?.into(),
            tau_nu: mean_estimate(b().map(|r| r.tau_nu))?.into(),
            tau_mu_prev: mean_estimate(a().map(|r| r.tau_mu_prev))?.into(),
            tau_nu_prev: mean_estimate(b().map(|r| r.tau_nu_prev))?.into(),
        })
    }

    pub fn histogram(&self, axis: Axis) -> &[u64] {
        match axis {
            Axis::A => &self.histogram_mu,
            Axis::B => &self.histogram_nu,
        }
    }

    /// `count / paths`; sums to the uncensored fraction.
    pub fn probabilities(&self, axis: Axis) -> Vec<f64> {
        self.histogram(axis)
            .iter()
            .map(|&c| c as f64 / self.paths as f64)
            .collect()
    }

    /// `P(index = j)` among all paths with its binomial standard error.
    pub fn point_mass(&self, axis: Axis, j: usize) -> Estimate {
        let n = self.paths;
        let p = self.histogram(axis).get(j).copied().unwrap_or(0) as f64 / n as f64;
        Estimate {
            value: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }

    pub fn pgf(&self, axis: Axis, w: f64) -> Result<Estimate> {
        empirical_pgf(self.histogram(axis), w)
    }
}

pub fn estimate_exits_with(params: &ModelParams, thresholds: Thresholds, mc: &McConfig) -> Result<EmpiricalExitSummary> {
    EmpiricalExitSummary::from_batch(&simulate_exits(params, thresholds, mc)?)
}

/// Simulates `paths` paths with the default horizon and summarises them.
pub fn estimate_exits(params: &ModelParams, thresholds: Thresholds, paths: u64, seed: u64) -> Result<EmpiricalExitSummary> {
    estimate_exits_with(params, thresholds, &McConfig::new(paths, seed))
}

/// Sample mean of `w^index` from a histogram of uncensored indices.
pub fn empirical_pgf(histogram: &[u64], w: f64) -> Result<Estimate> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::Domain(format!("PGF argument must lie in [0, 1], got {w}")));
    }
    let n: u64 = histogram.iter().sum();
    if n == 0 {
        return Err(Error::NoData);
    }
    let mean = histogram
        .iter()
        .enumerate()
        .map(|(j, &c)| c as f64 * w.powi(j as i32))
        .sum::<f64>()
        / n as f64;
    if n == 1 {
        return Ok(Estimate { value: mean, se: 0.0, n });
    }
    let ss: f64 = histogram
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let d = w.powi(j as i32) - mean;
            c as f64 * d * d
        })
        .sum();
    Ok(Estimate {
        value: mean,
        se: (ss / (n - 1) as f64 / n as f64).sqrt(),
        n,
    })
}

/// Whether the level indicators of the joint functional are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Indicators {
    /// `1{A_mu <= m} 1{B_nu <= n}`, exactly as in the functional's definition.
    Literal,
    Dropped,
}

/// The integrand of the joint functional on one uncensored record.
pub fn functional_integrand(r: &ExitRecord, thresholds: Thresholds, ctx: &TransformContext, indicators: Indicators) -> f64 {
    if indicators == Indicators::Literal && (r.level_at_mu > thresholds.m || r.level_at_nu > thresholds.n) {
        return 0.0;
    }
    ctx.z.powi(r.mu as i32)
        * ctx.g.powi(r.nu as i32)
        * (-ctx.theta0 * r.tau_mu_prev - ctx.theta1 * r.tau_mu - ctx.vartheta0 * r.tau_nu_prev - ctx.vartheta1 * r.tau_nu)
            .exp()
}

pub fn functional_from_batch(
    batch: &ExitBatch,
    thresholds: Thresholds,
    ctx: &TransformContext,
    indicators: Indicators,
) -> Result<Estimate> {
    ctx.validate()?;
    mean_estimate(
        batch
            .records
            .iter()
            .filter(|r| !r.is_censored())
            .map(|r| functional_integrand(r, thresholds, ctx, indicators)),
    )
}

/// Monte Carlo estimate of the joint functional.
pub fn empirical_functional(
    params: &ModelParams,
    thresholds: Thresholds,
    ctx: &TransformContext,
    indicators: Indicators,
    mc: &McConfig,
) -> Result<Estimate> {
    ctx.validate()?;
    functional_from_batch(&simulate_exits(params, thresholds, mc)?, thresholds, ctx, indicators)
}

/// Exit record by a plain loop over the stored path, written independently
/// of [`crate::process::exit_indices`] for cross-checking.
pub fn scan_exit_reference(path: &SamplePath, thresholds: Thresholds) -> ExitRecord {
    let mut rec = ExitRecord {
        mu: path.len() - 1,
        nu: path.len() - 1,
        tau_mu_prev: f64::NAN,
        tau_mu: f64::NAN,
        tau_nu_prev: f64::NAN,
        tau_nu: f64::NAN,
        level_at_mu: *path.cumulative_a.last().unwrap_or(&0),
        level_at_nu: *path.cumulative_b.last().unwrap_or(&0),
        censored_a: true,
        censored_b: true,
    };
    let mut prev_epoch = 0.0;
    for j in 0..path.len() {
        if rec.censored_a && path.cumulative_a[j] >= thresholds.m {
            rec.mu = j;
            rec.tau_mu_prev = prev_epoch;
            rec.tau_mu = path.epochs[j];
            rec.level_at_mu = path.cumulative_a[j];
            rec.censored_a = false;
        }
        if rec.censored_b && path.cumulative_b[j] >= thresholds.n {
            rec.nu = j;
            rec.tau_nu_prev = prev_epoch;
            rec.tau_nu = path.epochs[j];
            rec.level_at_nu = path.cumulative_b[j];
            rec.censored_b = false;
        }
        prev_epoch = path.epochs[j];
    }
    rec
}

/// Groups of conformance rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantityFamily {
    /// Exit-index PGFs through the joint functional.
    TheoremPgf,
    /// Shift-epoch transforms through the joint functional.
    TheoremLst,
    /// The joint functional with its indicators.
    TheoremFunctional,
    /// Explicit exit-index PGFs.
    LemmaPgf,
    ExitIndexMean,
    ShiftTimeMean,
    /// Mean exit index re-simulated at other levels.
    LevelStudy,
}

impl QuantityFamily {
    pub const ALL: [QuantityFamily; 7] = [
        QuantityFamily::TheoremPgf,
        QuantityFamily::TheoremLst,
        QuantityFamily::TheoremFunctional,
        QuantityFamily::LemmaPgf,
        QuantityFamily::ExitIndexMean,
        QuantityFamily::ShiftTimeMean,
        QuantityFamily::LevelStudy,
    ];
}

/// Which quantities a conformance run tracks, and on which grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformancePlan {
    #[serde(default = "default_families")]
    pub families: Vec<QuantityFamily>,
    #[serde(default = "default_pgf_grid")]
    pub pgf_grid: Vec<f64>,
    #[serde(default = "default_lst_grid")]
    pub lst_grid: Vec<f64>,
    #[serde(default = "default_study_levels")]
    pub study_levels: Vec<u64>,
}

fn default_families() -> Vec<QuantityFamily> {
    QuantityFamily::ALL.to_vec()
}
fn default_pgf_grid() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}
fn default_lst_grid() -> Vec<f64> {
    vec![0.5]
}
fn default_study_levels() -> Vec<u64> {
    vec![2, 3, 5]
}

impl Default for ConformancePlan {
    fn default() -> Self {
        Self {
            families: default_families(),
            pgf_grid: default_pgf_grid(),
            lst_grid: default_lst_grid(),
            study_levels: default_study_levels(),
        }
    }
}

impl ConformancePlan {
    fn has(&self, f: QuantityFamily) -> bool {
        self.families.contains(&f)
    }

    /// Tracked quantities in a fixed order.
    pub fn quantities(&self, thresholds: Thresholds) -> Vec<Quantity> {
        let mut out = Vec::new();
        let axes = [Axis::A, Axis::B];
        if self.has(QuantityFamily::TheoremFunctional) {
            out.push(Quantity::Functional {
                ctx: TransformContext::neutral(),
            });
        }
        if self.has(QuantityFamily::TheoremPgf) {
            for axis in axes {
                for &arg in &self.pgf_grid {
                    out.push(Quantity::IndexPgf { axis, arg });
                }
            }
        }
        if self.has(QuantityFamily::TheoremLst) {
            for axis in axes {
                for prior in [true, false] {
                    for &arg in &self.lst_grid {
                        out.push(Quantity::ShiftLst { axis, prior, arg });
                    }
                }
            }
        }
        if self.has(QuantityFamily::LemmaPgf) {
            for axis in axes {
                for &arg in &self.pgf_grid {
                    out.push(Quantity::LemmaPgf { axis, arg });
                }
            }
        }
        if self.has(QuantityFamily::ExitIndexMean) {
            out.push(Quantity::MeanExitIndex {
                axis: Axis::A,
                level: thresholds.m,
            });
            out.push(Quantity::MeanExitIndex {
                axis: Axis::B,
                level: thresholds.n,
            });
        }
        if self.has(QuantityFamily::ShiftTimeMean) {
            for axis in axes {
                for prior in [false, true] {
                    out.push(Quantity::MeanShiftTime { axis, prior });
                }
            }
        }
        if self.has(QuantityFamily::LevelStudy) {
            for &level in self.study_levels.iter().filter(|&&l| l != thresholds.m) {
                out.push(Quantity::MeanExitIndex { axis: Axis::A, level });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticBundle {
    pub params: ModelParams,
    pub thresholds: Thresholds,
    pub entries: Vec<(Quantity, AnalyticValue)>,
}

pub fn analytic_bundle(params: &ModelParams, thresholds: Thresholds, plan: &ConformancePlan) -> Result<AnalyticBundle> {
    let entries = plan
        .quantities(thresholds)
        .into_iter()
        .map(|q| analytic_value(&q, params, thresholds).map(|v| (q, v)))
        .collect::<Result<_>>()?;
    Ok(AnalyticBundle {
        params: *params,
        thresholds,
        entries,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalBundle {
    pub params: ModelParams,
    pub thresholds: Thresholds,
    pub summary: EmpiricalExitSummary,
    pub entries: Vec<(Quantity, Estimate)>,
}

/// Simulates once at `thresholds` (plus once per study level) and estimates
/// every quantity of the plan.
pub fn empirical_bundle(
    params: &ModelParams,
    thresholds: Thresholds,
    plan: &ConformancePlan,
    mc: &McConfig,
) -> Result<EmpiricalBundle> {
    let batch = simulate_exits(params, thresholds, mc)?;
    let summary = EmpiricalExitSummary::from_batch(&batch)?;
    let axis_mean = |axis: Axis, f: &dyn Fn(&ExitRecord) -> f64| {
        mean_estimate(
            batch
                .records
                .iter()
                .filter(|r| if axis == Axis::A { !r.censored_a } else { !r.censored_b })
                .map(f),
        )
    };
    let mut entries = Vec::new();
    for q in plan.quantities(thresholds) {
        let est = match q {
            Quantity::IndexPgf { axis, arg } | Quantity::LemmaPgf { axis, arg } => summary.pgf(axis, arg)?,
            Quantity::ShiftLst { axis, prior, arg } => axis_mean(axis, &|r: &ExitRecord| {
                let t = match (axis, prior) {
                    (Axis::A, true) => r.tau_mu_prev,
                    (Axis::A, false) => r.tau_mu,
                    (Axis::B, true) => r.tau_nu_prev,
                    (Axis::B, false) => r.tau_nu,
                };
                (-arg * t).exp()
            })?,
            Quantity::Functional { ctx } => functional_from_batch(&batch, thresholds, &ctx, Indicators::Literal)?,
            Quantity::MeanExitIndex { axis, level } => {
                let own = if axis == Axis::A { thresholds.m } else { thresholds.n };
                let m = if level == own {
                    if axis == Axis::A { summary.mu } else { summary.nu }
                } else {
                    let mut shifted = thresholds;
                    match axis {
                        Axis::A => shifted.m = level,
                        Axis::B => shifted.n = level,
                    }
                    let s = estimate_exits_with(params, shifted, mc)?;
                    if axis == Axis::A { s.mu } else { s.nu }
                };
                Estimate {
                    value: m.mean,
                    se: m.se,
                    n: m.n,
                }
            }
            Quantity::MeanShiftTime { axis, prior } => {
                let m = match (axis, prior) {
                    (Axis::A, false) => summary.tau_mu,
                    (Axis::A, true) => summary.tau_mu_prev,
                    (Axis::B, false) => summary.tau_nu,
                    (Axis::B, true) => summary.tau_nu_prev,
                };
                Estimate {
                    value: m.mean,
                    se: m.se,
                    n: m.n,
                }
            }
        };
        entries.push((q, est));
    }
    Ok(EmpiricalBundle {
        params: *params,
        thresholds,
        summary,
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Match,
    Deviation,
    NotAssertable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Match => "match",
            Verdict::Deviation => "deviation",
            Verdict::NotAssertable => "not-assertable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceRow {
    pub quantity: String,
    pub paper_ref: String,
    pub analytic: Option<f64>,
    /// Set when the analytic side is not a plain claim.
    pub analytic_note: Option<String>,
    pub mc_estimate: f64,
    pub se: f64,
    pub rel_dev: Option<f64>,
    pub verdict: Verdict,
}

impl ConformanceRow {
    pub fn is_eligible(&self) -> bool {
        self.verdict != Verdict::NotAssertable
    }
}

/// One row per tracked quantity; `match` when the estimate lies within
/// three standard errors of a claimed analytic value.
pub fn conformance(analytic: &AnalyticBundle, empirical: &EmpiricalBundle) -> Result<Vec<ConformanceRow>> {
    if analytic.params != empirical.params {
        return Err(Error::Mismatch("model parameters differ between bundles".into()));
    }
    if analytic.thresholds != empirical.thresholds {
        return Err(Error::Mismatch("thresholds differ between bundles".into()));
    }
    analytic
        .entries
        .iter()
        .map(|(q, a)| {
            let (_, est) = empirical
                .entries
                .iter()
                .find(|(eq, _)| eq == q)
                .ok_or_else(|| Error::Mismatch(format!("no empirical estimate for {}", q.name())))?;
            let rel_dev = a
                .value
                .filter(|v| *v != 0.0)
                .map(|v| (est.value - v) / v.abs());
            let verdict = match (a.value, &a.status) {
                (Some(v), AnalyticStatus::Claimed) => {
                    if (est.value - v).abs() <= MATCH_SE_MULTIPLE * est.se {
                        Verdict::Match
                    } else {
                        Verdict::Deviation
                    }
                }
                _ => Verdict::NotAssertable,
            };
            let analytic_note = match &a.status {
                AnalyticStatus::Claimed => None,
                AnalyticStatus::AsPrinted(s) => Some(format!("as-printed: {s}")),
                AnalyticStatus::Singular(s) => Some(format!("singular: {s}")),
                AnalyticStatus::Unavailable(s) => Some(s.clone()),
            };
            Ok(ConformanceRow {
                quantity: q.name(),
                paper_ref: q.formula(),
                analytic: a.value,
                analytic_note,
                mc_estimate: est.value,
                se: est.se,
                rel_dev,
                verdict,
            })
        })
        .collect()
}

/// True when no verdict-eligible row deviates.
pub fn gate_passes(rows: &[ConformanceRow]) -> bool {
    rows.iter().all(|r| r.verdict != Verdict::Deviation)
}
