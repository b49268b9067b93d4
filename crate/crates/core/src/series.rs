//! Dense truncated power series in one and two formal variables.
//!
//! A series of order `M` retains the coefficients of `x^0 ..= x^M`. Binary
//! operations truncate to the smaller operand order, so every retained
//! coefficient of a result is exact.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    /// Builds a series from its coefficients; the order is `coeffs.len() - 1`.
    /// An empty vector is treated as the zero series of order 0.
    pub fn new(coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            return Self { coeffs: vec![0.0] };
        }
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![0.0; order + 1],
        }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = value;
        s
    }

    /// `scale * x^power`, or zero when `power > order`.
    pub fn monomial(power: usize, scale: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        if power <= order {
            s.coeffs[power] = scale;
        }
        s
    }

    /// The identity series `x`.
    pub fn variable(order: usize) -> Self {
        Self::monomial(1, 1.0, order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Result<f64> {
        self.coeffs.get(k).copied().ok_or(Error::Order {
            requested: k,
            available: self.order(),
        })
    }

    pub fn truncate(&self, order: usize) -> Self {
        let keep = (order + 1).min(self.coeffs.len());
        Self::new(self.coeffs[..keep].to_vec())
    }

    /// Pads with zero coefficients up to `order`. Only valid for series that
    /// are genuinely polynomial (e.g. finite input sequences).
    pub fn padded(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < order + 1 {
            coeffs.resize(order + 1, 0.0);
        }
        Self { coeffs }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Adds `value` to the constant term.
    pub fn shift(&self, value: f64) -> Self {
        let mut s = self.clone();
        s.coeffs[0] += value;
        s
    }

    /// Horner evaluation of the retained polynomial.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn recip(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0 == 0.0 || !a0.is_finite() {
            return Err(Error::Domain(
                "series reciprocal needs a finite nonzero constant term".into(),
            ));
        }
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        out[0] = 1.0 / a0;
        for k in 1..n {
            let acc: f64 = (1..=k).map(|i| self.coeffs[i] * out[k - i]).sum();
            out[k] = -acc / a0;
        }
        Ok(Self { coeffs: out })
    }

    /// `exp` of the series, via `k b_k = sum_{i=1..k} i a_i b_{k-i}`.
    pub fn exp(&self) -> Self {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        out[0] = self.coeffs[0].exp();
        for k in 1..n {
            let acc: f64 = (1..=k)
                .map(|i| i as f64 * self.coeffs[i] * out[k - i])
                .sum();
            out[k] = acc / k as f64;
        }
        Self { coeffs: out }
    }

    /// Quotient `self / other` up to the common order.
    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.recip()?)
    }

    /// Composition `self(inner(x))`; `inner` must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if inner.coeffs[0] != 0.0 {
            return Err(Error::Domain(
                "composition needs an inner series without constant term".into(),
            ));
        }
        let order = self.order().min(inner.order());
        let inner = inner.truncate(order);
        let mut acc = TruncatedSeries::zero(order);
        // Horner in the series ring.
        for &c in self.coeffs[..=order].iter().rev() {
            acc = (&acc * &inner).shift(c);
        }
        Ok(acc)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = self.coeffs.len().min(other.coeffs.len());
        Self {
            coeffs: (0..n).map(|i| f(self.coeffs[i], other.coeffs[i])).collect(),
        }
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: Self) -> TruncatedSeries {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: Self) -> TruncatedSeries {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        self.scale(-1.0)
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: Self) -> TruncatedSeries {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, a) in self.coeffs[..n].iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in rhs.coeffs[..n - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        TruncatedSeries { coeffs: out }
    }
}

/// Bivariate series with coefficients `c[j][k]` of `x^j y^k`, `j <= M`, `k <= N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries2 {
    order_x: usize,
    order_y: usize,
    data: Vec<f64>,
}

impl TruncatedSeries2 {
    pub fn zero(order_x: usize, order_y: usize) -> Self {
        Self {
            order_x,
            order_y,
            data: vec![0.0; (order_x + 1) * (order_y + 1)],
        }
    }

    /// Builds from row-major rows (`rows[j][k]` is the `x^j y^k` coefficient).
    /// All rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidParameter(
                "bivariate coefficient grid must be a nonempty rectangle".into(),
            ));
        }
        Ok(Self {
            order_x: rows.len() - 1,
            order_y: width - 1,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Separable product `f(x) g(y)`.
    pub fn outer(fx: &TruncatedSeries, gy: &TruncatedSeries) -> Self {
        let mut out = Self::zero(fx.order(), gy.order());
        for (j, a) in fx.coefficients().iter().enumerate() {
            for (k, b) in gy.coefficients().iter().enumerate() {
                out.set(j, k, a * b);
            }
        }
        out
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.order_x, self.order_y)
    }

    fn idx(&self, j: usize, k: usize) -> usize {
        j * (self.order_y + 1) + k
    }

    pub fn coeff(&self, j: usize, k: usize) -> Result<f64> {
        if j > self.order_x {
            return Err(Error::Order {
                requested: j,
                available: self.order_x,
            });
        }
        if k > self.order_y {
            return Err(Error::Order {
                requested: k,
                available: self.order_y,
            });
        }
        Ok(self.data[self.idx(j, k)])
    }

    pub fn set(&mut self, j: usize, k: usize, value: f64) {
        let i = self.idx(j, k);
        self.data[i] = value;
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            data: self.data.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }

    fn get_unchecked(&self, j: usize, k: usize) -> f64 {
        self.data[self.idx(j, k)]
    }
}

impl Add for &TruncatedSeries2 {
    type Output = TruncatedSeries2;
    fn add(self, rhs: Self) -> TruncatedSeries2 {
        let (mx, my) = (
            self.order_x.min(rhs.order_x),
            self.order_y.min(rhs.order_y),
        );
        let mut out = TruncatedSeries2::zero(mx, my);
        for j in 0..=mx {
            for k in 0..=my {
                out.set(j, k, self.get_unchecked(j, k) + rhs.get_unchecked(j, k));
            }
        }
        out
    }
}

impl Mul for &TruncatedSeries2 {
    type Output = TruncatedSeries2;
    fn mul(self, rhs: Self) -> TruncatedSeries2 {
        let (mx, my) = (
            self.order_x.min(rhs.order_x),
            self.order_y.min(rhs.order_y),
        );
        let mut out = TruncatedSeries2::zero(mx, my);
        for j1 in 0..=mx {
            for k1 in 0..=my {
                let a = self.get_unchecked(j1, k1);
                if a == 0.0 {
                    continue;
                }
                for j2 in 0..=mx - j1 {
                    for k2 in 0..=my - k1 {
                        let i = out.idx(j1 + j2, k1 + k2);
                        out.data[i] += a * rhs.get_unchecked(j2, k2);
                    }
                }
            }
        }
        out
    }
}
