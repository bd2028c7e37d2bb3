//! Truncated Taylor series in t₂ and scalar function providers that expose them.
//!
//! Moment generation needs many nested derivatives of β; numerical differencing loses
//! all accuracy after a few levels, so providers hand out Taylor coefficients instead.

use crate::error::Result;
use crate::matcore::{CMatrix, C64};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Coefficients `a_k = f⁽ᵏ⁾(t₀)/k!` of a truncated Taylor expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor(pub Vec<C64>);

impl Taylor {
    pub fn constant(v: C64, len: usize) -> Self {
        let mut a = vec![C64::new(0.0, 0.0); len.max(1)];
        a[0] = v;
        Taylor(a)
    }

    /// The independent variable `t₀ + s`.
    pub fn variable(t0: f64, len: usize) -> Self {
        let mut a = Self::constant(C64::new(t0, 0.0), len);
        if a.0.len() > 1 {
            a.0[1] = C64::new(1.0, 0.0);
        }
        a
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn value(&self) -> C64 {
        self.0[0]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> C64 {
        let fact: f64 = (1..=k).map(|j| j as f64).product();
        self.0[k] * fact
    }

    pub fn truncate(&self, len: usize) -> Self {
        Taylor(self.0[..len.min(self.len())].to_vec())
    }

    /// Series of the derivative (one coefficient shorter).
    pub fn diff(&self) -> Self {
        if self.len() <= 1 {
            return Taylor(vec![C64::new(0.0, 0.0)]);
        }
        Taylor((1..self.len()).map(|k| self.0[k] * k as f64).collect())
    }

    /// Series of the antiderivative with the given value at the expansion point.
    pub fn integral(&self, value: C64) -> Self {
        let mut a = Vec::with_capacity(self.len() + 1);
        a.push(value);
        a.extend(self.0.iter().enumerate().map(|(k, &x)| x / (k + 1) as f64));
        Taylor(a)
    }

    pub fn scale(&self, s: C64) -> Self {
        Taylor(self.0.iter().map(|&x| x * s).collect())
    }

    pub fn conj(&self) -> Self {
        Taylor(self.0.iter().map(|x| x.conj()).collect())
    }

    pub fn recip(&self) -> Self {
        Taylor::constant(C64::new(1.0, 0.0), self.len()).div(self)
    }

    pub fn div(&self, b: &Taylor) -> Self {
        let n = self.len().min(b.len());
        let mut c = Vec::with_capacity(n);
        for k in 0..n {
            let mut s = self.0[k];
            for j in 1..=k {
                s -= b.0[j] * c[k - j];
            }
            c.push(s / b.0[0]);
        }
        Taylor(c)
    }

    pub fn powi(&self, e: i32) -> Self {
        let mut acc = Taylor::constant(C64::new(1.0, 0.0), self.len());
        for _ in 0..e.unsigned_abs() {
            acc = &acc * self;
        }
        if e < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    pub fn exp(&self) -> Self {
        let n = self.len();
        let mut y = vec![self.0[0].exp()];
        for k in 1..n {
            let s: C64 = (1..=k).map(|j| self.0[j] * y[k - j] * j as f64).sum();
            y.push(s / k as f64);
        }
        Taylor(y)
    }

    /// (sin u, cos u).
    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.len();
        let mut s = vec![self.0[0].sin()];
        let mut c = vec![self.0[0].cos()];
        for k in 1..n {
            let mut ss = C64::new(0.0, 0.0);
            let mut cc = C64::new(0.0, 0.0);
            for j in 1..=k {
                let ju = self.0[j] * j as f64;
                ss += ju * c[k - j];
                cc -= ju * s[k - j];
            }
            s.push(ss / k as f64);
            c.push(cc / k as f64);
        }
        (Taylor(s), Taylor(c))
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    /// tanh u from `y' = (1 − y²)u'`.
    pub fn tanh(&self) -> Self {
        let n = self.len();
        let mut y = vec![self.0[0].tanh()];
        let mut w = vec![C64::new(1.0, 0.0) - y[0] * y[0]];
        for k in 1..n {
            let s: C64 = (1..=k).map(|j| self.0[j] * w[k - j] * j as f64).sum();
            y.push(s / k as f64);
            let sq: C64 = (0..=k).map(|i| y[i] * y[k - i]).sum();
            w.push(-sq);
        }
        Taylor(y)
    }

    /// sech² u = 1 − tanh² u.
    pub fn sech2(&self) -> Self {
        let t = self.tanh();
        &Taylor::constant(C64::new(1.0, 0.0), t.len()) - &(&t * &t)
    }
}

impl Add for &Taylor {
    type Output = Taylor;
    fn add(self, b: &Taylor) -> Taylor {
        let n = self.len().min(b.len());
        Taylor((0..n).map(|k| self.0[k] + b.0[k]).collect())
    }
}

impl Sub for &Taylor {
    type Output = Taylor;
    fn sub(self, b: &Taylor) -> Taylor {
        let n = self.len().min(b.len());
        Taylor((0..n).map(|k| self.0[k] - b.0[k]).collect())
    }
}

impl Mul for &Taylor {
    type Output = Taylor;
    fn mul(self, b: &Taylor) -> Taylor {
        let n = self.len().min(b.len());
        Taylor((0..n).map(|k| (0..=k).map(|j| self.0[j] * b.0[k - j]).sum()).collect())
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        Taylor(self.0.iter().map(|&x| -x).collect())
    }
}

/// Cauchy product of matrix-coefficient series.
pub fn matrix_series_mul(a: &[CMatrix], b: &[CMatrix]) -> Vec<CMatrix> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|k| {
            let mut s = &a[0] * &b[k];
            for j in 1..=k {
                s += &a[j] * &b[k - j];
            }
            s
        })
        .collect()
}

/// Series of `X(t)⁻¹` given the series of X and the inverse of its constant term.
pub fn matrix_series_inverse(x: &[CMatrix], x0_inv: &CMatrix) -> Vec<CMatrix> {
    let mut y: Vec<CMatrix> = vec![x0_inv.clone()];
    for k in 1..x.len() {
        let mut s = &x[1] * &y[k - 1];
        for j in 2..=k {
            s += &x[j] * &y[k - j];
        }
        y.push(-(x0_inv * s));
    }
    y
}

/// A scalar function of t₂ that can expand itself in a Taylor series.
pub trait ScalarFn: Send + Sync + fmt::Debug {
    /// Taylor coefficients of order `0..=order` at `t`.
    fn taylor(&self, t: f64, order: usize) -> Result<Taylor>;

    fn value(&self, t: f64) -> Result<C64> {
        Ok(self.taylor(t, 0)?.0[0])
    }

    fn derivative(&self, t: f64) -> Result<C64> {
        Ok(self.taylor(t, 1)?.derivative(1))
    }
}

impl<T: ScalarFn + ?Sized> ScalarFn for std::sync::Arc<T> {
    fn taylor(&self, t: f64, order: usize) -> Result<Taylor> {
        (**self).taylor(t, order)
    }
}

/// β = −τ'/τ for a τ-function provider.
#[derive(Debug, Clone)]
pub struct LogDerivative<F> {
    pub tau: F,
}

impl<F: ScalarFn> ScalarFn for LogDerivative<F> {
    fn taylor(&self, t: f64, order: usize) -> Result<Taylor> {
        let tau = self.tau.taylor(t, order + 1)?;
        Ok(-&tau.diff().div(&tau.truncate(order + 1)))
    }
}
