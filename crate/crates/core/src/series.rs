//! Truncated formal power series over `f64`.
//!
//! A [`PowerSeries`] of order `N` stores the coefficients of `z^0 .. z^{N-1}`.
//! Every operation works modulo `z^N` and never reads past index `N - 1` of an
//! operand. Binary operations require equal orders.
//!
//! Composition is Horner-style and requires the inner series to vanish at 0.
//! Call sites that need `f(g(z))` with `g(0) != 0` rewrite `f` as a Taylor
//! expansion around `g(0)` (usually through [`PowerSeries::log`] /
//! [`PowerSeries::exp`]) and compose with `g - g(0)`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default truncation order used by the canonical-representation oracles.
pub const DEFAULT_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
}

impl PowerSeries {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptySeries);
        }
        Ok(Self { coeffs })
    }

    /// Build a series of the given order from a coefficient function.
    pub fn from_fn(order: usize, f: impl FnMut(usize) -> f64) -> Self {
        assert!(order >= 1, "order must be >= 1");
        Self {
            coeffs: (0..order).map(f).collect(),
        }
    }

    pub fn zero(order: usize) -> Self {
        Self::from_fn(order, |_| 0.0)
    }

    pub fn constant(c: f64, order: usize) -> Self {
        Self::from_fn(order, |k| if k == 0 { c } else { 0.0 })
    }

    pub fn one(order: usize) -> Self {
        Self::constant(1.0, order)
    }

    /// `a + b z`, truncated.
    pub fn linear(a: f64, b: f64, order: usize) -> Self {
        Self::from_fn(order, |k| match k {
            0 => a,
            1 => b,
            _ => 0.0,
        })
    }

    /// The identity series `z`.
    pub fn identity(order: usize) -> Self {
        Self::linear(0.0, 1.0, order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficient of `z^k`; zero beyond the truncation order.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Re-truncate (or zero-pad) to a new order.
    pub fn with_order(&self, order: usize) -> Self {
        Self::from_fn(order, |k| self.coeff(k))
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(Self::from_fn(self.order(), |k| {
            self.coeffs[k] + other.coeffs[k]
        }))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(Self::from_fn(self.order(), |k| {
            self.coeffs[k] - other.coeffs[k]
        }))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_fn(self.order(), |k| c * self.coeffs[k])
    }

    /// Add a constant to the `z^0` coefficient.
    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Cauchy product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let n = self.order();
        let mut out = vec![0.0; n];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs[..n - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(Self { coeffs: out })
    }

    /// Quotient `self / divisor` by forward substitution.
    pub fn div(&self, divisor: &Self) -> Result<Self> {
        self.check_order(divisor)?;
        let d0 = divisor.coeffs[0];
        if d0 == 0.0 {
            return Err(Error::DivisionByZeroConstant);
        }
        let n = self.order();
        let mut out = vec![0.0; n];
        for k in 0..n {
            let acc: f64 = (1..=k).map(|j| divisor.coeffs[j] * out[k - j]).sum();
            out[k] = (self.coeffs[k] - acc) / d0;
        }
        Ok(Self { coeffs: out })
    }

    /// `self(inner(z))`, Horner scheme. `inner` must have a zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        self.check_order(inner)?;
        if inner.coeffs[0] != 0.0 {
            return Err(Error::NonZeroInnerConstant(inner.coeffs[0]));
        }
        let n = self.order();
        let mut acc = Self::constant(self.coeffs[n - 1], n);
        for k in (0..n - 1).rev() {
            acc = acc.mul(inner)?.add_constant(self.coeffs[k]);
        }
        Ok(acc)
    }

    /// `exp(self)` via `b' = a' b`.
    pub fn exp(&self) -> Self {
        let n = self.order();
        let a = &self.coeffs;
        let mut b = vec![0.0; n];
        b[0] = a[0].exp();
        for m in 1..n {
            let s: f64 = (1..=m).map(|k| k as f64 * a[k] * b[m - k]).sum();
            b[m] = s / m as f64;
        }
        Self { coeffs: b }
    }

    /// Principal `log(self)`; requires a positive constant term.
    pub fn log(&self) -> Result<Self> {
        let a = &self.coeffs;
        if !(a[0] > 0.0) {
            return Err(Error::LogDomain(a[0]));
        }
        let n = self.order();
        let mut c = vec![0.0; n];
        c[0] = a[0].ln();
        for m in 1..n {
            let s: f64 = (1..m).map(|k| k as f64 * c[k] * a[m - k]).sum();
            c[m] = (a[m] - s / m as f64) / a[0];
        }
        Ok(Self { coeffs: c })
    }

    /// Formal derivative. The top coefficient of the result is zero.
    pub fn derivative(&self) -> Self {
        let n = self.order();
        Self::from_fn(n, |k| {
            if k + 1 < n {
                (k + 1) as f64 * self.coeffs[k + 1]
            } else {
                0.0
            }
        })
    }

    /// Antiderivative with zero constant term; the top input coefficient drops
    /// out of the truncation.
    pub fn antiderivative(&self) -> Self {
        Self::from_fn(self.order(), |k| {
            if k == 0 {
                0.0
            } else {
                self.coeffs[k - 1] / k as f64
            }
        })
    }

    /// Evaluate the truncated polynomial at `z` (Horner).
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// First-factorial moment `sum k a_k` of the truncated coefficients.
    pub fn first_moment(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| k as f64 * c)
            .sum()
    }

    /// Mean and variance of the truncated coefficients read as a pmf.
    pub fn mean_variance(&self) -> (f64, f64) {
        let mean = self.first_moment();
        let fact2: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| (k as f64) * (k as f64 - 1.0) * c)
            .sum();
        (mean, fact2 + mean - mean * mean)
    }

    /// Index and value of the smallest coefficient at index `>= from`.
    pub fn min_coefficient_from(&self, from: usize) -> Option<(usize, f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(from)
            .fold(None, |best, (k, &c)| match best {
                Some((_, v)) if v <= c => best,
                _ => Some((k, c)),
            })
    }

    /// First index `>= from` whose coefficient is below `-tol`.
    pub fn first_below(&self, from: usize, tol: f64) -> Option<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(from)
            .find(|(_, &c)| c < -tol)
            .map(|(k, _)| k)
    }

    /// Largest absolute coefficient difference against `other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_order(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}
