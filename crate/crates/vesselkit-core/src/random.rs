//! Seeded random instances: stable realizations, signature matrices and admissible Schur steps.

use crate::error::{Error, Result};
use crate::matcore::{c, eye, hermitian_eigenvalues, zeros, CMatrix, C64};
use crate::realization::Realization;
use crate::schur::{xtilde, SchurStepData};
use rand::Rng;

pub fn complex<R: Rng>(rng: &mut R, scale: f64) -> C64 {
    c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

pub fn matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex(rng, scale))
}

/// Point with `Re λ ∈ [lo, hi]`, `|Im λ| ≤ hi`.
pub fn right_half_plane<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> C64 {
    c(rng.gen_range(lo..hi), rng.gen_range(-hi..hi))
}

/// Hermitian, invertible σ₁. With `definite` it is positive definite; otherwise it has
/// both signs whenever p ≥ 2.
pub fn sigma1<R: Rng>(rng: &mut R, p: usize, definite: bool) -> CMatrix {
    loop {
        let g = matrix(rng, p, p, 1.0);
        let q = g.clone().qr().q();
        let d: Vec<f64> = (0..p)
            .map(|k| {
                let mag = rng.gen_range(0.5..2.0);
                if definite || k % 2 == 0 { mag } else { -mag }
            })
            .collect();
        let mut dm = zeros(p, p);
        for (k, v) in d.iter().enumerate() {
            dm[(k, k)] = c(*v, 0.0);
        }
        let s = &q * dm * q.adjoint();
        let s = (&s + s.adjoint()) * c(0.5, 0.0);
        let e = hermitian_eigenvalues(&s);
        if e.iter().all(|v| v.abs() > 0.25) {
            return s;
        }
    }
}

/// Realization with a well-conditioned 𝕏 > 0: `A₁ = (K − Bσ₁B*/2)𝕏⁻¹` with K skew-Hermitian
/// solves the Lyapunov equation for any B.
pub fn stable_realization<R: Rng>(rng: &mut R, n: usize, sigma1: &CMatrix) -> Result<Realization> {
    let p = sigma1.nrows();
    for _ in 0..100 {
        let g = matrix(rng, n, n, 0.5);
        let x = &g * g.adjoint() + eye(n) * c(0.5, 0.0);
        let k = matrix(rng, n, n, 1.0);
        let k = (&k - k.adjoint()) * c(0.5, 0.0);
        let b = matrix(rng, n, p, 1.0);
        let xinv = match x.clone().try_inverse() {
            Some(v) => v,
            None => continue,
        };
        let a = (k - &b * sigma1 * b.adjoint() * c(0.5, 0.0)) * xinv;
            if let Ok(r) = Realization::new(a, b, x, sigma1.clone()) {
            if r.spectrum().iter().all(|e| e.re.abs() > 1e-3) {
                return Ok(r);
            }
        }
    }
    Err(Error::NotFound)
}

/// Step `(w, ξ, η)` with `𝕏̃ ≥ margin·(‖ξ‖² + ‖η‖²)‖σ₁‖`, by rejection sampling.
pub fn admissible_step<R: Rng>(rng: &mut R, sigma1: &CMatrix, margin: f64) -> Result<SchurStepData> {
    let p = sigma1.nrows();
    for _ in 0..1000 {
        let w = right_half_plane(rng, 0.2, 3.0);
        let xi = matrix(rng, 1, p, 1.0);
        let eta = matrix(rng, 1, p, 0.7);
        let step = SchurStepData::new(w, xi, eta)?;
        let xt = xtilde(&step, sigma1)?;
        let scale = (step.xi.norm_squared() + step.eta.norm_squared()) * sigma1.norm();
        if xt > margin * scale {
            return Ok(step);
        }
    }
    Err(Error::NotFound)
}
