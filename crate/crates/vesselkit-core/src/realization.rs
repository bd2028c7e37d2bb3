//! State-space realizations `S(λ) = I − B*𝕏⁻¹(λI − A₁)⁻¹Bσ₁`.

use crate::error::{Error, Result};
use crate::json::{matrix_from_json, matrix_to_json, MatrixJson};
use crate::matcore::{
    c, eigenvalues, eye, fro, hermitian_defect, hermitian_eigenvalues, inverse, singular_values,
    solve, solve_sylvester, zeros, CMatrix, C64,
};
use serde::{Deserialize, Serialize};

const HERMITIAN_TOL: f64 = 1e-9;
const INVERTIBLE_TOL: f64 = 1e-12;

/// The quadruple (A₁, B, 𝕏, σ₁). `B` is n×p, so that `B*` maps the state to the output.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RealizationJson", into = "RealizationJson")]
pub struct Realization {
    a1: CMatrix,
    b: CMatrix,
    x: CMatrix,
    sigma1: CMatrix,
    x_inv: CMatrix,
    spectrum: Vec<C64>,
}

/// Values of the σ₁-inner checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerResidual {
    /// max ‖S(iω)*σ₁S(iω) − σ₁‖_F over the axis samples.
    pub axis: f64,
    /// max λ_max(S(λ)*σ₁S(λ) − σ₁) over the right half-plane samples (≤ 0 for contractive S).
    pub rhp_max_eig: f64,
}

fn check_invertible_hermitian(m: &CMatrix, what: &'static str) -> Result<()> {
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_TOL * fro(m).max(1.0) {
        return Err(Error::NotHermitian { defect });
    }
    if m.nrows() > 0 {
        let s = singular_values(m);
        if !(s[s.len() - 1] > INVERTIBLE_TOL * s[0]) {
            return Err(Error::NotInvertible(what));
        }
    }
    Ok(())
}

impl Realization {
    pub fn new(a1: CMatrix, b: CMatrix, x: CMatrix, sigma1: CMatrix) -> Result<Self> {
        let n = a1.nrows();
        let p = sigma1.nrows();
        if a1.ncols() != n
            || x.shape() != (n, n)
            || b.shape() != (n, p)
            || sigma1.ncols() != p
        {
            return Err(Error::DimensionMismatch(format!(
                "realization: A1 {:?}, B {:?}, X {:?}, sigma1 {:?}",
                a1.shape(),
                b.shape(),
                x.shape(),
                sigma1.shape()
            )));
        }
        for (m, what) in [(&a1, "A1"), (&b, "B"), (&x, "X"), (&sigma1, "sigma1")] {
            crate::matcore::ensure_finite(m, what)?;
        }
        check_invertible_hermitian(&sigma1, "sigma1")?;
        check_invertible_hermitian(&x, "X")?;
        let x_inv = inverse(&x, "X")?;
        let spectrum = eigenvalues(&a1);
        Ok(Self { a1, b, x, sigma1, x_inv, spectrum })
    }

    /// The zero-state realization of S ≡ I_p.
    pub fn identity(sigma1: CMatrix) -> Result<Self> {
        let p = sigma1.nrows();
        Self::new(zeros(0, 0), zeros(0, p), zeros(0, 0), sigma1)
    }

    /// Builds a realization whose 𝕏 solves the Lyapunov equation `A₁𝕏 + 𝕏A₁* + Bσ₁B* = 0`.
    pub fn from_lyapunov(a1: CMatrix, b: CMatrix, sigma1: CMatrix) -> Result<Self> {
        let x = lyapunov_solve(&a1, &b, &sigma1)?;
        Self::new(a1, b, crate::matcore::hermitian_part(&x), sigma1)
    }

    pub fn a1(&self) -> &CMatrix {
        &self.a1
    }
    pub fn b(&self) -> &CMatrix {
        &self.b
    }
    pub fn x(&self) -> &CMatrix {
        &self.x
    }
    pub fn sigma1(&self) -> &CMatrix {
        &self.sigma1
    }
    pub fn x_inv(&self) -> &CMatrix {
        &self.x_inv
    }
    pub fn spectrum(&self) -> &[C64] {
        &self.spectrum
    }
    /// State dimension n.
    pub fn dim(&self) -> usize {
        self.a1.nrows()
    }
    /// Input/output dimension p.
    pub fn p(&self) -> usize {
        self.sigma1.nrows()
    }

    /// ‖A₁𝕏 + 𝕏A₁* + Bσ₁B*‖_F.
    pub fn lyapunov_residual(&self) -> f64 {
        fro(&lyapunov_lhs(&self.a1, &self.b, &self.x, &self.sigma1))
    }

    /// Natural scale of the Lyapunov residual: ‖A₁‖‖𝕏‖ + ‖B‖²‖σ₁‖.
    pub fn lyapunov_scale(&self) -> f64 {
        fro(&self.a1) * fro(&self.x) + fro(&self.b).powi(2) * fro(&self.sigma1)
    }

    fn check_pole(&self, lambda: C64) -> Result<()> {
        let tol = 1e-10 * (1.0 + fro(&self.a1));
        if self.spectrum.iter().any(|&e| (e - lambda).norm() <= tol) {
            return Err(Error::PoleAt(lambda));
        }
        Ok(())
    }

    /// `(λI − A₁)⁻¹B`.
    pub fn resolvent_b(&self, lambda: C64) -> Result<CMatrix> {
        self.check_pole(lambda)?;
        let n = self.dim();
        let m = eye(n) * lambda - &self.a1;
        solve(&m, &self.b, "lambda I - A1").map_err(|_| Error::PoleAt(lambda))
    }

    /// S(λ).
    pub fn eval_transfer(&self, lambda: C64) -> Result<CMatrix> {
        let p = self.p();
        if self.dim() == 0 {
            return Ok(eye(p));
        }
        let rb = self.resolvent_b(lambda)?;
        Ok(eye(p) - self.b.adjoint() * &self.x_inv * rb * &self.sigma1)
    }

    /// Resolvent form `σ₁B*(w̄I − A₁*)⁻¹𝕏⁻¹(λI − A₁)⁻¹Bσ₁` of the reproducing kernel.
    pub fn kernel_resolvent(&self, lambda: C64, w: C64) -> Result<CMatrix> {
        let p = self.p();
        if self.dim() == 0 {
            return Ok(zeros(p, p));
        }
        let rl = self.resolvent_b(lambda)?;
        let rw = self.resolvent_b(w)?;
        Ok(&self.sigma1 * rw.adjoint() * &self.x_inv * rl * &self.sigma1)
    }

    /// `K_S(λ, w) = (σ₁ − S(w)*σ₁S(λ))/(w̄ + λ)`; falls back to the resolvent form at λ = −w̄.
    pub fn kernel_ks(&self, lambda: C64, w: C64) -> Result<CMatrix> {
        let denom = w.conj() + lambda;
        if denom.norm() <= 1e-12 * (1.0 + lambda.norm()) {
            return self.kernel_resolvent(lambda, w);
        }
        let sl = self.eval_transfer(lambda)?;
        let sw = self.eval_transfer(w)?;
        Ok((&self.sigma1 - sw.adjoint() * &self.sigma1 * sl) / denom)
    }

    /// Quotient form only; errors when λ = −w̄.
    pub fn kernel_quotient(&self, lambda: C64, w: C64) -> Result<CMatrix> {
        let denom = w.conj() + lambda;
        if denom.norm() <= 1e-12 * (1.0 + lambda.norm()) {
            return Err(Error::DegenerateDenominator);
        }
        self.kernel_ks(lambda, w)
    }

    /// σ₁-unitarity on the imaginary axis and σ₁-contractivity at right half-plane points.
    pub fn sigma1_inner_residual(&self, omegas: &[f64], rhp: &[C64]) -> Result<InnerResidual> {
        let mut axis: f64 = 0.0;
        for &om in omegas {
            let s = self.eval_transfer(c(0.0, om))?;
            axis = axis.max(fro(&(s.adjoint() * &self.sigma1 * &s - &self.sigma1)));
        }
        let mut rhp_max_eig = f64::NEG_INFINITY;
        for &l in rhp {
            let s = self.eval_transfer(l)?;
            let d = s.adjoint() * &self.sigma1 * &s - &self.sigma1;
            let e = hermitian_eigenvalues(&d);
            rhp_max_eig = rhp_max_eig.max(e.last().copied().unwrap_or(0.0));
        }
        Ok(InnerResidual { axis, rhp_max_eig })
    }

    /// Markov moment `H_i = B*𝕏⁻¹A₁ⁱBσ₁`.
    pub fn markov_moment(&self, i: usize) -> CMatrix {
        let mut v = self.b.clone();
        for _ in 0..i {
            v = &self.a1 * v;
        }
        self.b.adjoint() * &self.x_inv * v * &self.sigma1
    }

    /// `H_0 … H_{count−1}`.
    pub fn markov_moments(&self, count: usize) -> Vec<CMatrix> {
        let left = self.b.adjoint() * &self.x_inv;
        let mut v = self.b.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(&left * &v * &self.sigma1);
            v = &self.a1 * v;
        }
        out
    }

    /// Pick matrix with blocks `B*(A₁*)ⁱ𝕏⁻¹A₁ʲB`, `0 ≤ i, j ≤ depth`.
    pub fn pick_matrix(&self, depth: usize) -> CMatrix {
        let p = self.p();
        let mut powers = Vec::with_capacity(depth + 1);
        let mut v = self.b.clone();
        for _ in 0..=depth {
            powers.push(v.clone());
            v = &self.a1 * v;
        }
        let mut out = zeros((depth + 1) * p, (depth + 1) * p);
        for i in 0..=depth {
            for j in 0..=depth {
                let blk = powers[i].adjoint() * &self.x_inv * &powers[j];
                out.view_mut((i * p, j * p), (p, p)).copy_from(&blk);
            }
        }
        out
    }

    /// Similar realization `(VA₁V⁻¹, VB, V𝕏V*)`; it has the same transfer function.
    pub fn transform(&self, v: &CMatrix) -> Result<Self> {
        let vinv = inverse(v, "similarity")?;
        Self::new(
            v * &self.a1 * vinv,
            v * &self.b,
            v * &self.x * v.adjoint(),
            self.sigma1.clone(),
        )
    }
}

/// `A𝕏 + 𝕏A* + Bσ₁B*`.
pub fn lyapunov_lhs(a: &CMatrix, b: &CMatrix, x: &CMatrix, sigma1: &CMatrix) -> CMatrix {
    a * x + x * a.adjoint() + b * sigma1 * b.adjoint()
}

/// Solves `A𝕏 + 𝕏A* = −Bσ₁B*`.
pub fn lyapunov_solve(a: &CMatrix, b: &CMatrix, sigma1: &CMatrix) -> Result<CMatrix> {
    let rhs = -(b * sigma1 * b.adjoint());
    solve_sylvester(a, &a.adjoint(), &rhs)
}

#[derive(Serialize, Deserialize)]
struct RealizationJson {
    a1: MatrixJson,
    b: MatrixJson,
    x: MatrixJson,
    sigma1: MatrixJson,
}

impl TryFrom<RealizationJson> for Realization {
    type Error = Error;
    fn try_from(j: RealizationJson) -> Result<Self> {
        let sigma1 = matrix_from_json(&j.sigma1, 0)?;
        let p = sigma1.nrows();
        let a1 = matrix_from_json(&j.a1, 0)?;
        let b = matrix_from_json(&j.b, p)?;
        let x = matrix_from_json(&j.x, 0)?;
        Realization::new(a1, b, x, sigma1)
    }
}

impl From<Realization> for RealizationJson {
    fn from(r: Realization) -> Self {
        Self {
            a1: matrix_to_json(&r.a1),
            b: matrix_to_json(&r.b),
            x: matrix_to_json(&r.x),
            sigma1: matrix_to_json(&r.sigma1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{real_matrix, scalar};

    fn fix_a() -> Realization {
        Realization::new(scalar(c(-1.0, 0.0)), scalar(c(1.0, 0.0)), scalar(c(0.5, 0.0)), eye(1))
            .unwrap()
    }

    #[test]
    fn fix_a_transfer_is_blaschke_factor() {
        let r = fix_a();
        assert!(r.eval_transfer(c(1.0, 0.0)).unwrap()[(0, 0)].norm() < 1e-15);
        for om in [0.1, 1.0, 7.0] {
            let s = r.eval_transfer(c(0.0, om)).unwrap()[(0, 0)];
            assert!((s.norm() - 1.0).abs() < 1e-14);
        }
        let far = r.eval_transfer(c(1e14, 0.0)).unwrap();
        assert!((far[(0, 0)] - 1.0).norm() < 1e-10);
    }

    #[test]
    fn kernel_values() {
        let r = fix_a();
        let k = r.kernel_ks(c(1.0, 0.0), c(1.0, 0.0)).unwrap()[(0, 0)];
        assert!((k - 0.5).norm() < 1e-15);
        let k = r.kernel_ks(c(2.0, 0.0), c(1.0, 0.0)).unwrap()[(0, 0)];
        assert!((k - 1.0 / 3.0).norm() < 1e-15);
        let id = Realization::identity(eye(2)).unwrap();
        assert_eq!(fro(&id.kernel_ks(c(1.0, 2.0), c(0.5, 0.0)).unwrap()), 0.0);
    }

    #[test]
    fn moments_and_pick() {
        let r = fix_a();
        let h = r.markov_moments(3);
        assert!((h[0][(0, 0)] - 2.0).norm() < 1e-15);
        assert!((h[1][(0, 0)] + 2.0).norm() < 1e-15);
        assert!((h[2][(0, 0)] - 2.0).norm() < 1e-15);
        assert!((r.markov_moment(1)[(0, 0)] + 2.0).norm() < 1e-15);
        assert!((r.pick_matrix(0)[(0, 0)] - 2.0).norm() < 1e-15);
        let p1 = r.pick_matrix(1);
        let expect = real_matrix(2, 2, &[2.0, -2.0, -2.0, 2.0]);
        assert!(fro(&(p1 - expect)) < 1e-14);
    }

    #[test]
    fn pole_is_reported() {
        let r = fix_a();
        assert!(matches!(r.eval_transfer(c(-1.0, 0.0)), Err(Error::PoleAt(_))));
    }

    #[test]
    fn invalid_realizations_rejected() {
        let bad_x = Realization::new(
            scalar(c(-1.0, 0.0)),
            scalar(c(1.0, 0.0)),
            scalar(c(0.0, 0.0)),
            eye(1),
        );
        assert!(bad_x.is_err());
        let bad_dims = Realization::new(eye(2), zeros(1, 1), eye(2), eye(1));
        assert!(matches!(bad_dims, Err(Error::DimensionMismatch(_))));
    }
}
