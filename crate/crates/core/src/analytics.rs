//! Closed-form side of the model: the joint exit functional evaluated through
//! operator extraction, its marginal specialisations, the explicit exit-index
//! PGFs and the mean exit indices and shift moments.
//!
//! Every formula here is evaluated as stated, without corrections. Whether a
//! value agrees with simulation is decided by [`crate::oracle::conformance`],
//! not asserted here.

use crate::error::{Axis, Error, Result};
use crate::process::{IntervalDist, MarkDist, ModelParams, Thresholds};
use crate::series::{TruncatedSeries, TruncatedSeries2};
use crate::transform::{d_extract, d_extract_2d, gamma_series, lst, TransformContext};

/// Extra series order kept beyond the extraction index.
pub const SERIES_GUARD: usize = 8;

/// One axis of the functional: the generating-function factors for A (in
/// `x`, with `z`, `theta0`, `theta1`) or for B (in `y`, with `g`,
/// `vartheta0`, `vartheta1`).
#[derive(Debug, Clone)]
pub struct AxisFactors {
    pub weight: f64,
    pub lambda: f64,
    /// `delta(theta1)`.
    pub delta_shift: f64,
    /// `gamma(x, theta1)`.
    pub phi: TruncatedSeries,
    /// `gamma(x, theta0 + theta1)`.
    pub big_gamma: TruncatedSeries,
    /// `gamma_0(x, theta0 + theta1)`, built on the initial interval.
    pub big_gamma0: TruncatedSeries,
}

impl AxisFactors {
    #[allow(clippy::too_many_arguments)]
    fn build(
        weight: f64,
        theta0: f64,
        theta1: f64,
        lambda: f64,
        marks: MarkDist,
        initial: IntervalDist,
        interval: IntervalDist,
        order: usize,
    ) -> Result<Self> {
        Ok(Self {
            weight,
            lambda,
            delta_shift: lst(interval.family, interval.mean, theta1)?,
            phi: gamma_series(theta1, lambda, marks, interval, order)?,
            big_gamma: gamma_series(theta0 + theta1, lambda, marks, interval, order)?,
            big_gamma0: gamma_series(theta0 + theta1, lambda, marks, initial, order)?,
        })
    }

    /// `(delta_shift - phi)(w - w G0 G + G0) / (1 - w G)`.
    pub fn psi(&self) -> Result<TruncatedSeries> {
        let order = self.phi.order();
        if self.lambda == 0.0 {
            // phi is the constant delta_shift, so the leading factor vanishes.
            return Ok(TruncatedSeries::zero(order));
        }
        let w = self.weight;
        let lead = &TruncatedSeries::constant(self.delta_shift, order) - &self.phi;
        let g0g = &self.big_gamma0 * &self.big_gamma;
        let middle = &(&g0g.scale(-w) + &self.big_gamma0).shift(w) * &lead;
        let denom = self.big_gamma.scale(-w).shift(1.0);
        middle.div(&denom)
    }
}

/// The series ingredients of the joint functional for given levels and
/// transform arguments.
#[derive(Debug, Clone)]
pub struct TheoremContext {
    pub m: u64,
    pub n: u64,
    pub ctx: TransformContext,
    pub a: AxisFactors,
    pub b: AxisFactors,
}

impl TheoremContext {
    pub fn new(m: u64, n: u64, ctx: TransformContext, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        ctx.validate()?;
        let a = AxisFactors::build(
            ctx.z,
            ctx.theta0,
            ctx.theta1,
            params.lambda_a,
            params.marks_a,
            params.initial,
            params.interval,
            m as usize + SERIES_GUARD,
        )?;
        let b = AxisFactors::build(
            ctx.g,
            ctx.vartheta0,
            ctx.vartheta1,
            params.lambda_b,
            params.marks_b,
            params.initial,
            params.interval,
            n as usize + SERIES_GUARD,
        )?;
        Ok(Self { m, n, ctx, a, b })
    }

    /// `Psi(x, y)` as a bivariate grid.
    pub fn psi(&self) -> Result<TruncatedSeries2> {
        Ok(TruncatedSeries2::outer(&self.a.psi()?, &self.b.psi()?))
    }

    /// Operator extraction of `Psi` at `(m, n)`.
    pub fn value(&self) -> Result<f64> {
        d_extract_2d(&self.psi()?, self.m as i64, self.n as i64)
    }

    /// Product of the one-variable extractions of the two factors.
    pub fn separable_value(&self) -> Result<f64> {
        Ok(d_extract(&self.a.psi()?, self.m as i64)? * d_extract(&self.b.psi()?, self.n as i64)?)
    }
}

/// The joint functional `Phi_(m,n)(z, g, theta0, theta1, vartheta0, vartheta1)`.
pub fn phi_functional(m: u64, n: u64, ctx: TransformContext, params: &ModelParams) -> Result<f64> {
    TheoremContext::new(m, n, ctx, params)?.value()
}

/// Marginal transforms obtained by neutralising all but one argument of the
/// joint functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marginal {
    /// `E[z^mu]`
    MuIndex,
    /// `E[g^nu]`
    NuIndex,
    /// `E[exp(-theta0 tau_{mu-1})]`
    TauMuPrev,
    /// `E[exp(-theta1 tau_mu)]`
    TauMu,
    /// `E[exp(-vartheta0 tau_{nu-1})]`
    TauNuPrev,
    /// `E[exp(-vartheta1 tau_nu)]`
    TauNu,
}

impl Marginal {
    pub fn context(self, arg: f64) -> TransformContext {
        let mut c = TransformContext::neutral();
        match self {
            Marginal::MuIndex => c.z = arg,
            Marginal::NuIndex => c.g = arg,
            Marginal::TauMuPrev => c.theta0 = arg,
            Marginal::TauMu => c.theta1 = arg,
            Marginal::TauNuPrev => c.vartheta0 = arg,
            Marginal::TauNu => c.vartheta1 = arg,
        }
        c
    }
}

pub fn marginal_pgf(which: Marginal, arg: f64, m: u64, n: u64, params: &ModelParams) -> Result<f64> {
    phi_functional(m, n, which.context(arg), params)
}

/// Geometric-form constants for both axes.
///
/// `alpha = d l / (1 + d l)`, `beta = 1 / (1 + d l)` with `d` the mean
/// subsequent interval; the `*0` variants use the mean initial interval.
/// `kappa_* = 1 / (l (d0 - d))` is `None` where it is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaConstants {
    pub alpha_a: f64,
    pub beta_a: f64,
    pub alpha0_a: f64,
    pub beta0_a: f64,
    pub alpha_b: f64,
    pub beta_b: f64,
    pub alpha0_b: f64,
    pub beta0_b: f64,
    pub kappa_a: Option<f64>,
    pub kappa_b: Option<f64>,
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub delta0: f64,
    pub delta: f64,
    pub memoryless: bool,
}

fn geometric_pair(mean: f64, lambda: f64) -> (f64, f64) {
    let x = mean * lambda;
    (x / (1.0 + x), 1.0 / (1.0 + x))
}

fn kappa(lambda: f64, delta0: f64, delta: f64) -> Option<f64> {
    let denom = lambda * (delta0 - delta);
    (denom != 0.0 && denom.is_finite()).then(|| 1.0 / denom)
}

impl LemmaConstants {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let (d0, d) = (params.delta0_mean(), params.delta_mean());
        let (alpha_a, beta_a) = geometric_pair(d, params.lambda_a);
        let (alpha0_a, beta0_a) = geometric_pair(d0, params.lambda_a);
        let (alpha_b, beta_b) = geometric_pair(d, params.lambda_b);
        let (alpha0_b, beta0_b) = geometric_pair(d0, params.lambda_b);
        Ok(Self {
            alpha_a,
            beta_a,
            alpha0_a,
            beta0_a,
            alpha_b,
            beta_b,
            alpha0_b,
            beta0_b,
            kappa_a: kappa(params.lambda_a, d0, d),
            kappa_b: kappa(params.lambda_b, d0, d),
            lambda_a: params.lambda_a,
            lambda_b: params.lambda_b,
            delta0: d0,
            delta: d,
            memoryless: params.is_memoryless(),
        })
    }

    fn axis(&self, axis: Axis) -> (f64, f64, f64, Option<f64>) {
        match axis {
            Axis::A => (self.lambda_a, self.alpha0_a, self.beta0_a, self.kappa_a),
            Axis::B => (self.lambda_b, self.alpha0_b, self.beta0_b, self.kappa_b),
        }
    }
}

/// Explicit exit-index PGF for one axis, term by term as stated:
///
/// `w + (1 - k) b0 S + k b0 S - (1 - w) w / (1 + d0 l - w) * sum_{i<=level} r^i`
///
/// with `S = sum_{j<=level} a0^j` and `r = d0 l / (1 + d0 l - w)`.
pub fn lemma_pgf(axis: Axis, w: f64, level: u64, c: &LemmaConstants) -> Result<f64> {
    if !c.memoryless {
        return Err(Error::RequiresMemoryless);
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::Domain(format!("PGF argument must lie in [0, 1], got {w}")));
    }
    let (lambda, alpha0, beta0, kappa) = c.axis(axis);
    let kappa = kappa.ok_or_else(|| {
        Error::Singular(format!(
            "kappa for axis {axis} is 1/(lambda (d0 - d)) with lambda = {lambda}, d0 = {}, d = {}",
            c.delta0, c.delta
        ))
    })?;
    let bracket: f64 = (0..=level).map(|j| alpha0.powi(j as i32)).sum();
    let shifted = 1.0 + c.delta0 * lambda - w;
    let ratio = c.delta0 * lambda / shifted;
    let tail: f64 = (0..=level).map(|k| ratio.powi(k as i32)).sum();
    Ok(w + (1.0 - kappa) * beta0 * bracket + kappa * beta0 * bracket - (1.0 - w) * w / shifted * tail)
}

pub fn lemma_pgf_a(z: f64, m: u64, c: &LemmaConstants) -> Result<f64> {
    lemma_pgf(Axis::A, z, m, c)
}

pub fn lemma_pgf_b(g: f64, n: u64, c: &LemmaConstants) -> Result<f64> {
    lemma_pgf(Axis::B, g, n, c)
}

/// `1 / (d lambda)` for one axis.
pub fn mean_exit_index(axis: Axis, lambda: f64, interval_mean: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::NoExit(axis));
    }
    Ok(1.0 / (interval_mean * lambda))
}

/// `d0 + 1/lambda - d` for one axis.
pub fn mean_shift_time(axis: Axis, lambda: f64, initial_mean: f64, interval_mean: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::NoExit(axis));
    }
    Ok(initial_mean + 1.0 / lambda - interval_mean)
}

/// `(E[mu], E[nu])`.
pub fn expected_exit_index(params: &ModelParams) -> Result<(f64, f64)> {
    params.validate()?;
    Ok((
        mean_exit_index(Axis::A, params.lambda_a, params.delta_mean())?,
        mean_exit_index(Axis::B, params.lambda_b, params.delta_mean())?,
    ))
}

/// Expected shift moments and the prior (one observation earlier) moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftMoments {
    pub tau_mu: f64,
    pub tau_nu: f64,
    pub tau_mu_prev: f64,
    pub tau_nu_prev: f64,
}

pub fn expected_shift_time(params: &ModelParams) -> Result<ShiftMoments> {
    params.validate()?;
    let (d0, d) = (params.delta0_mean(), params.delta_mean());
    let tau_mu = mean_shift_time(Axis::A, params.lambda_a, d0, d)?;
    let tau_nu = mean_shift_time(Axis::B, params.lambda_b, d0, d)?;
    Ok(ShiftMoments {
        tau_mu,
        tau_nu,
        tau_mu_prev: tau_mu - d,
        tau_nu_prev: tau_nu - d,
    })
}

/// A tracked analytic claim that has a simulated counterpart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    /// `E[w^index]` through the functional with the other arguments neutral.
    IndexPgf { axis: Axis, arg: f64 },
    /// `E[exp(-arg tau)]` for the shift epoch, or the epoch before it when
    /// `prior` is set, through the functional.
    ShiftLst { axis: Axis, prior: bool, arg: f64 },
    /// The joint functional itself with its level indicators.
    Functional { ctx: TransformContext },
    /// The explicit exit-index PGF.
    LemmaPgf { axis: Axis, arg: f64 },
    /// `E[index]`, simulated at exceedance level `level`.
    MeanExitIndex { axis: Axis, level: u64 },
    /// `E[tau]`, or `E[tau_prev]` when `prior` is set.
    MeanShiftTime { axis: Axis, prior: bool },
}

fn index_symbol(axis: Axis) -> (&'static str, &'static str, &'static str) {
    match axis {
        Axis::A => ("mu", "z", "lambda_a"),
        Axis::B => ("nu", "g", "lambda_b"),
    }
}

impl Quantity {
    pub fn name(&self) -> String {
        match *self {
            Quantity::IndexPgf { axis, arg } => {
                let (idx, var, _) = index_symbol(axis);
                format!("pgf_{idx}({var}={arg})")
            }
            Quantity::ShiftLst { axis, prior, arg } => {
                let (idx, _, _) = index_symbol(axis);
                let suffix = if prior { "_prev" } else { "" };
                format!("lst_tau_{idx}{suffix}(s={arg})")
            }
            Quantity::Functional { ctx } => format!(
                "phi(z={} g={} theta0={} theta1={} vartheta0={} vartheta1={})",
                ctx.z, ctx.g, ctx.theta0, ctx.theta1, ctx.vartheta0, ctx.vartheta1
            ),
            Quantity::LemmaPgf { axis, arg } => {
                let (idx, var, _) = index_symbol(axis);
                format!("lemma_pgf_{idx}({var}={arg})")
            }
            Quantity::MeanExitIndex { axis, level } => {
                let (idx, _, _) = index_symbol(axis);
                let lv = if axis == Axis::A { "m" } else { "n" };
                format!("mean_{idx}({lv}={level})")
            }
            Quantity::MeanShiftTime { axis, prior } => {
                let (idx, _, _) = index_symbol(axis);
                let suffix = if prior { "_prev" } else { "" };
                format!("mean_tau_{idx}{suffix}")
            }
        }
    }

    /// The closed form the row tests.
    pub fn formula(&self) -> String {
        match *self {
            Quantity::IndexPgf { axis: Axis::A, .. } => "E[z^mu] = Phi(z,1,0,0,0,0)".into(),
            Quantity::IndexPgf { axis: Axis::B, .. } => "E[g^nu] = Phi(1,g,0,0,0,0)".into(),
            Quantity::ShiftLst { axis: Axis::A, prior: true, .. } => {
                "E[exp(-theta0 tau_{mu-1})] = Phi(1,1,theta0,0,0,0)".into()
            }
            Quantity::ShiftLst { axis: Axis::A, prior: false, .. } => {
                "E[exp(-theta1 tau_mu)] = Phi(1,1,0,theta1,0,0)".into()
            }
            Quantity::ShiftLst { axis: Axis::B, prior: true, .. } => {
                "E[exp(-vartheta0 tau_{nu-1})] = Phi(1,1,0,0,vartheta0,0)".into()
            }
            Quantity::ShiftLst { axis: Axis::B, prior: false, .. } => {
                "E[exp(-vartheta1 tau_nu)] = Phi(1,1,0,0,0,vartheta1)".into()
            }
            Quantity::Functional { .. } => "Phi_(m,n) = D^(m,n)_(x,y)[Psi(x,y)]".into(),
            Quantity::LemmaPgf { axis, .. } => {
                let (idx, var, lambda) = index_symbol(axis);
                format!("E[{var}^{idx}] explicit form in d0*{lambda} and kappa")
            }
            Quantity::MeanExitIndex { axis, .. } => {
                let (idx, _, lambda) = index_symbol(axis);
                format!("E[{idx}] = 1/(d*{lambda})")
            }
            Quantity::MeanShiftTime { axis, prior } => {
                let (idx, _, lambda) = index_symbol(axis);
                if prior {
                    format!("E[tau_{{{idx}-1}}] = d0 + 1/{lambda} - 2d")
                } else {
                    format!("E[tau_{idx}] = d0 + 1/{lambda} - d")
                }
            }
        }
    }
}

/// Status of the analytic side of a conformance row.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticStatus {
    /// Claimed to hold; the row is verdict-eligible.
    Claimed,
    /// Evaluated as stated but known to be suspect; reported, never gated.
    AsPrinted(String),
    /// Undefined for these parameters (e.g. a vanishing denominator).
    Singular(String),
    /// Not applicable to these parameters (e.g. non-memoryless intervals).
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticValue {
    pub value: Option<f64>,
    pub status: AnalyticStatus,
}

impl AnalyticValue {
    fn claimed(value: f64) -> Self {
        Self {
            value: Some(value),
            status: AnalyticStatus::Claimed,
        }
    }

    fn as_printed(value: f64, note: &str) -> Self {
        Self {
            value: Some(value),
            status: AnalyticStatus::AsPrinted(note.into()),
        }
    }

    fn from_error(e: Error) -> Result<Self> {
        let status = match e {
            Error::Singular(msg) => AnalyticStatus::Singular(msg),
            Error::RequiresMemoryless => AnalyticStatus::Unavailable("requires memoryless".into()),
            Error::NoExit(axis) => AnalyticStatus::Unavailable(format!("no shift predicted on axis {axis}")),
            other => return Err(other),
        };
        Ok(Self { value: None, status })
    }

    pub fn is_claimed(&self) -> bool {
        self.status == AnalyticStatus::Claimed
    }
}

/// Evaluates the analytic side of `q`.
///
/// The explicit PGFs and the mean exit index away from level 1 are reported
/// as-printed; everything else is a claim.
pub fn analytic_value(q: &Quantity, params: &ModelParams, thresholds: Thresholds) -> Result<AnalyticValue> {
    let (m, n) = (thresholds.m, thresholds.n);
    let outcome = match *q {
        Quantity::IndexPgf { axis, arg } => {
            let which = if axis == Axis::A { Marginal::MuIndex } else { Marginal::NuIndex };
            marginal_pgf(which, arg, m, n, params).map(AnalyticValue::claimed)
        }
        Quantity::ShiftLst { axis, prior, arg } => {
            let which = match (axis, prior) {
                (Axis::A, true) => Marginal::TauMuPrev,
                (Axis::A, false) => Marginal::TauMu,
                (Axis::B, true) => Marginal::TauNuPrev,
                (Axis::B, false) => Marginal::TauNu,
            };
            marginal_pgf(which, arg, m, n, params).map(AnalyticValue::claimed)
        }
        Quantity::Functional { ctx } => phi_functional(m, n, ctx, params).map(AnalyticValue::claimed),
        Quantity::LemmaPgf { axis, arg } => {
            let level = if axis == Axis::A { m } else { n };
            LemmaConstants::new(params)
                .and_then(|c| lemma_pgf(axis, arg, level, &c))
                .map(|v| AnalyticValue::as_printed(v, "bracket sums evaluated as printed"))
        }
        Quantity::MeanExitIndex { axis, level } => {
            let lambda = if axis == Axis::A { params.lambda_a } else { params.lambda_b };
            mean_exit_index(axis, lambda, params.delta_mean()).map(|v| {
                if level == 1 {
                    AnalyticValue::claimed(v)
                } else {
                    AnalyticValue::as_printed(v, "closed form carries no level dependence")
                }
            })
        }
        Quantity::MeanShiftTime { axis, prior } => {
            let lambda = if axis == Axis::A { params.lambda_a } else { params.lambda_b };
            mean_shift_time(axis, lambda, params.delta0_mean(), params.delta_mean()).map(|t| {
                AnalyticValue::claimed(if prior { t - params.delta_mean() } else { t })
            })
        }
    };
    outcome.or_else(AnalyticValue::from_error)
}
