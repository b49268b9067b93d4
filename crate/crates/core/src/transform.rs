//! Laplace–Stieltjes transforms of the observation intervals, the marginal
//! increment transforms, and the operator pair used to extract coefficients
//! from generating functions.
//!
//! The forward operator maps a sequence `g` to `(1 - x) sum_k g(k) x^k`; its
//! inverse reads off the `k`-th Taylor coefficient of `F(x) / (1 - x)`, which
//! is the partial sum `F_0 + ... + F_k`.

use crate::error::{Error, Result};
use crate::process::{IntervalDist, IntervalFamily, MarkDist};
use crate::series::{TruncatedSeries, TruncatedSeries2};

/// `E[exp(-theta T)]` for an interval `T` of the given family and mean.
pub fn lst(family: IntervalFamily, mean: f64, theta: f64) -> Result<f64> {
    check_mean(mean)?;
    if !(theta >= 0.0) {
        return Err(Error::Domain(format!("transform argument must be >= 0, got {theta}")));
    }
    Ok(lst_unchecked(family, mean, theta))
}

fn lst_unchecked(family: IntervalFamily, mean: f64, theta: f64) -> f64 {
    match family {
        IntervalFamily::Exponential => 1.0 / (1.0 + mean * theta),
        IntervalFamily::Deterministic => (-theta * mean).exp(),
    }
}

fn check_mean(mean: f64) -> Result<()> {
    if mean.is_finite() && mean > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("interval mean must be > 0, got {mean}")))
    }
}

/// The transform applied to a series argument, `delta(u(x))`.
///
/// Only the constant term of `u` has to be nonnegative; the remaining
/// coefficients are formal.
pub fn lst_series(dist: IntervalDist, u: &TruncatedSeries) -> Result<TruncatedSeries> {
    check_mean(dist.mean)?;
    match dist.family {
        IntervalFamily::Exponential => {
            // 1 / (1 + mean * u); the constant term is evaluated exactly as in `lst`.
            let out = u.scale(dist.mean).shift(1.0).recip()?;
            let mut c = out.into_coefficients();
            c[0] = lst_unchecked(dist.family, dist.mean, u.coefficients()[0]);
            Ok(TruncatedSeries::new(c))
        }
        IntervalFamily::Deterministic => Ok(u.scale(-dist.mean).exp()),
    }
}

/// `E[z^a e^{-theta Delta}] = delta(theta + lambda (1 - h(z)))` for the
/// compound Poisson increment `a` over an interval `Delta`.
pub fn gamma_marginal(z: f64, theta: f64, lambda: f64, marks: MarkDist, dist: IntervalDist) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("PGF argument must lie in [0, 1], got {z}")));
    }
    if !(theta >= 0.0) {
        return Err(Error::Domain(format!("transform argument must be >= 0, got {theta}")));
    }
    lst(dist.family, dist.mean, theta + lambda * (1.0 - marks.pgf(z)))
}

/// `gamma(x, theta)` as a series in the formal variable `x`.
pub fn gamma_series(
    theta: f64,
    lambda: f64,
    marks: MarkDist,
    dist: IntervalDist,
    order: usize,
) -> Result<TruncatedSeries> {
    // u(x) = theta + lambda - lambda * h(x)
    let u = marks.pgf_series(order).scale(-lambda).shift(theta + lambda);
    lst_series(dist, &u)
}

/// Coefficients `beta * alpha^k`, `k = 0..=order`, of `beta / (1 - alpha x)`.
pub fn geometric_series(beta: f64, alpha: f64, order: usize) -> Result<TruncatedSeries> {
    if !(alpha.abs() < 1.0) {
        return Err(Error::Divergent { alpha });
    }
    let mut c = Vec::with_capacity(order + 1);
    let mut term = beta;
    for _ in 0..=order {
        c.push(term);
        term *= alpha;
    }
    Ok(TruncatedSeries::new(c))
}

/// Forward operator: `(1 - x) G(x)` truncated at the order of `g`.
pub fn d_apply(g: &[f64]) -> TruncatedSeries {
    if g.is_empty() {
        return TruncatedSeries::zero(0);
    }
    let c = g
        .iter()
        .enumerate()
        .map(|(k, v)| if k == 0 { *v } else { v - g[k - 1] })
        .collect();
    TruncatedSeries::new(c)
}

/// Inverse operator at index `k`: the `k`-th coefficient of `F(x)/(1 - x)`.
/// Negative indices give zero.
pub fn d_extract(f: &TruncatedSeries, k: i64) -> Result<f64> {
    if k < 0 {
        return Ok(0.0);
    }
    let k = k as usize;
    if k > f.order() {
        return Err(Error::Order {
            requested: k,
            available: f.order(),
        });
    }
    Ok(f.coefficients()[..=k].iter().sum())
}

/// Forward operator in two variables: `(1 - x)(1 - y) G(x, y)`.
pub fn d_apply_2d(g: &TruncatedSeries2) -> TruncatedSeries2 {
    let (mx, my) = g.orders();
    let mut out = TruncatedSeries2::zero(mx, my);
    let at = |j: usize, k: usize| g.coeff(j, k).expect("in range");
    for j in 0..=mx {
        for k in 0..=my {
            let mut v = at(j, k);
            if j > 0 {
                v -= at(j - 1, k);
            }
            if k > 0 {
                v -= at(j, k - 1);
            }
            if j > 0 && k > 0 {
                v += at(j - 1, k - 1);
            }
            out.set(j, k, v);
        }
    }
    out
}

/// Inverse operator in two variables: the `(m, n)` coefficient of
/// `F(x, y) / ((1 - x)(1 - y))`, i.e. the rectangular partial sum.
pub fn d_extract_2d(f: &TruncatedSeries2, m: i64, n: i64) -> Result<f64> {
    if m < 0 || n < 0 {
        return Ok(0.0);
    }
    let (m, n) = (m as usize, n as usize);
    // Range-check both corners before summing.
    f.coeff(m, n)?;
    let mut total = 0.0;
    for j in 0..=m {
        for k in 0..=n {
            total += f.coeff(j, k)?;
        }
    }
    Ok(total)
}

/// Scalar transform arguments of the joint exit functional.
///
/// `z`, `g` weight the exit indices of A and B; `theta0`/`theta1` discount
/// `tau_{mu-1}`/`tau_mu`; `vartheta0`/`vartheta1` discount
/// `tau_{nu-1}`/`tau_nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformContext {
    pub z: f64,
    pub g: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub vartheta0: f64,
    pub vartheta1: f64,
}

impl Default for TransformContext {
    fn default() -> Self {
        Self::neutral()
    }
}

impl TransformContext {
    /// `z = g = 1`, all exponents zero.
    pub fn neutral() -> Self {
        Self {
            z: 1.0,
            g: 1.0,
            theta0: 0.0,
            theta1: 0.0,
            vartheta0: 0.0,
            vartheta1: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("z", self.z), ("g", self.g)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        for (name, v) in [
            ("theta0", self.theta0),
            ("theta1", self.theta1),
            ("vartheta0", self.vartheta0),
            ("vartheta1", self.vartheta1),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// `delta(theta)` and `delta_0(theta)` for the given observation laws.
    pub fn deltas(initial: IntervalDist, interval: IntervalDist, theta: f64) -> Result<(f64, f64)> {
        Ok((
            lst(interval.family, interval.mean, theta)?,
            lst(initial.family, initial.mean, theta)?,
        ))
    }
}
