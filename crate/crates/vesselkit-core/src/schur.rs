//! Tangential Schur algorithm: elementary J-inner factors Θ, the linear fractional
//! transformation `T_Θ`, one-step and n-step realizations, admissible-direction search.

use crate::error::{Error, Result};
use crate::json::{complex_from_json, complex_to_json, row_from_json, row_to_json, ComplexJson};
use crate::matcore::{c, fro, inverse, is_positive_definite, solve, zeros, CMatrix, Tolerance, C64};
use crate::realization::{lyapunov_solve, Realization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One tangential datum `(w, ξ, η)`; ξ and η are 1×p rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepJson", into = "StepJson")]
pub struct SchurStepData {
    pub w: C64,
    pub xi: CMatrix,
    pub eta: CMatrix,
}

impl SchurStepData {
    pub fn new(w: C64, xi: CMatrix, eta: CMatrix) -> Result<Self> {
        if !(w.re > 0.0) || !w.im.is_finite() {
            return Err(Error::InvalidArgument(format!("node w = {w} must have Re w > 0")));
        }
        if xi.nrows() != 1 || eta.nrows() != 1 || xi.ncols() != eta.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "xi {:?} and eta {:?} must be 1xp rows",
                xi.shape(),
                eta.shape()
            )));
        }
        Ok(Self { w, xi, eta })
    }

    /// Scalar convenience constructor (p = 1).
    pub fn scalar(w: C64, xi: C64, eta: C64) -> Result<Self> {
        Self::new(w, CMatrix::from_element(1, 1, xi), CMatrix::from_element(1, 1, eta))
    }

    pub fn p(&self) -> usize {
        self.xi.ncols()
    }
}

#[derive(Serialize, Deserialize)]
struct StepJson {
    w: ComplexJson,
    xi: Vec<ComplexJson>,
    eta: Vec<ComplexJson>,
}

impl TryFrom<StepJson> for SchurStepData {
    type Error = Error;
    fn try_from(j: StepJson) -> Result<Self> {
        SchurStepData::new(complex_from_json(j.w), row_from_json(&j.xi), row_from_json(&j.eta))
    }
}

impl From<SchurStepData> for StepJson {
    fn from(s: SchurStepData) -> Self {
        Self { w: complex_to_json(s.w), xi: row_to_json(&s.xi), eta: row_to_json(&s.eta) }
    }
}

/// `J = diag(−σ₁, σ₁)`.
pub fn signature_j(sigma1: &CMatrix) -> CMatrix {
    let p = sigma1.nrows();
    let mut j = zeros(2 * p, 2 * p);
    j.view_mut((0, 0), (p, p)).copy_from(&(-sigma1));
    j.view_mut((p, p), (p, p)).copy_from(sigma1);
    j
}

/// `𝕏̃ = (ξσ₁ξ* − ησ₁η*)/(w + w̄)`.
pub fn xtilde(step: &SchurStepData, sigma1: &CMatrix) -> Result<f64> {
    if step.p() != sigma1.nrows() {
        return Err(Error::DimensionMismatch("step width differs from sigma1".into()));
    }
    let num = (&step.xi * sigma1 * step.xi.adjoint() - &step.eta * sigma1 * step.eta.adjoint())[(0, 0)];
    let v = num / (step.w + step.w.conj());
    let scale = (fro(&step.xi).powi(2) + fro(&step.eta).powi(2)) * fro(sigma1) / (2.0 * step.w.re);
    if v.im.abs() > 1e-12 * scale.max(1.0) {
        return Err(Error::NotReal { imag: v.im });
    }
    Ok(v.re)
}

fn admissibility_floor(step: &SchurStepData, sigma1: &CMatrix) -> f64 {
    1e-8 * (fro(&step.xi).powi(2) + fro(&step.eta).powi(2)) * fro(sigma1)
}

fn admissible_xtilde(step: &SchurStepData, sigma1: &CMatrix, index: Option<usize>) -> Result<f64> {
    let xt = xtilde(step, sigma1)?;
    if !(xt > admissibility_floor(step, sigma1)) {
        return Err(Error::InadmissibleDirection { index, xtilde: xt });
    }
    Ok(xt)
}

/// A J-inner function `Θ(λ) = I₂ₚ − B*𝕏⁻¹(λI − A)⁻¹BJ`, stored as a realization with signature J.
#[derive(Debug, Clone)]
pub struct ThetaFunction {
    pub realization: Realization,
}

/// The four p×p blocks of Θ(λ).
#[derive(Debug, Clone)]
pub struct ThetaBlocks {
    pub t11: CMatrix,
    pub t12: CMatrix,
    pub t21: CMatrix,
    pub t22: CMatrix,
}

impl ThetaFunction {
    pub fn identity(sigma1: &CMatrix) -> Result<Self> {
        Ok(Self { realization: Realization::identity(signature_j(sigma1))? })
    }

    pub fn p(&self) -> usize {
        self.realization.p() / 2
    }

    pub fn eval(&self, lambda: C64) -> Result<CMatrix> {
        self.realization.eval_transfer(lambda)
    }

    pub fn blocks(&self, lambda: C64) -> Result<ThetaBlocks> {
        let t = self.eval(lambda)?;
        let p = self.p();
        Ok(ThetaBlocks {
            t11: t.view((0, 0), (p, p)).into_owned(),
            t12: t.view((0, p), (p, p)).into_owned(),
            t21: t.view((p, 0), (p, p)).into_owned(),
            t22: t.view((p, p), (p, p)).into_owned(),
        })
    }

    /// max ‖Θ(iω)*JΘ(iω) − J‖_F over the samples.
    pub fn j_inner_residual(&self, omegas: &[f64]) -> Result<f64> {
        Ok(self.realization.sigma1_inner_residual(omegas, &[])?.axis)
    }
}

/// Θ for a single node: A = [−w̄], B = [−η ξ], 𝕏 = [𝕏̃].
pub fn build_theta_single(step: &SchurStepData, sigma1: &CMatrix) -> Result<ThetaFunction> {
    build_theta_multi(std::slice::from_ref(step), sigma1)
}

/// Θ for several nodes: B rows `[−ηᵢ ξᵢ]`, A₁ = diag(−w̄ᵢ), 𝕏 from the J-Lyapunov equation.
pub fn build_theta_multi(steps: &[SchurStepData], sigma1: &CMatrix) -> Result<ThetaFunction> {
    let p = sigma1.nrows();
    let n = steps.len();
    for (i, s) in steps.iter().enumerate() {
        if s.p() != p {
            return Err(Error::DimensionMismatch(format!("node {i} width {} vs p = {p}", s.p())));
        }
        if steps[..i].iter().any(|o| (o.w - s.w).norm() <= 1e-12 * (1.0 + s.w.norm())) {
            return Err(Error::DuplicateNode(i));
        }
    }
    let j = signature_j(sigma1);
    let mut a = zeros(n, n);
    let mut b = zeros(n, 2 * p);
    for (i, s) in steps.iter().enumerate() {
        a[(i, i)] = -s.w.conj();
        b.view_mut((i, 0), (1, p)).copy_from(&(-&s.eta));
        b.view_mut((i, p), (1, p)).copy_from(&s.xi);
    }
    let x = crate::matcore::hermitian_part(&lyapunov_solve(&a, &b, &j)?);
    if n > 0 {
        let (pd, lmin) = is_positive_definite(&x, Tolerance::absolute(1e-12))?;
        if !pd {
            return Err(Error::GramNotPositive { lambda_min: lmin });
        }
    }
    Ok(ThetaFunction { realization: Realization::new(a, b, x, j)? })
}

/// Θ interpolating the values of `s` at the points: ηᵢ = ξᵢS(wᵢ)*.
pub fn build_theta_for(s: &Realization, points: &[(C64, CMatrix)]) -> Result<ThetaFunction> {
    let steps = points
        .iter()
        .map(|(w, xi)| {
            let eta = xi * s.eval_transfer(*w)?.adjoint();
            SchurStepData::new(*w, xi.clone(), eta)
        })
        .collect::<Result<Vec<_>>>()?;
    build_theta_multi(&steps, s.sigma1())
}

/// Parameter of a linear fractional transformation.
#[derive(Debug, Clone, Copy)]
pub enum LftParam<'a> {
    Constant(&'a CMatrix),
    Realization(&'a Realization),
}

impl LftParam<'_> {
    fn value(&self, lambda: C64) -> Result<CMatrix> {
        match self {
            LftParam::Constant(m) => Ok((*m).clone()),
            LftParam::Realization(r) => r.eval_transfer(lambda),
        }
    }
}

/// `T_Θ(W)(λ) = (Θ₁₁ + WΘ₂₁)⁻¹(Θ₁₂ + WΘ₂₂)`.
pub fn lft_apply(theta: &ThetaFunction, param: LftParam<'_>, lambda: C64) -> Result<CMatrix> {
    let blk = theta.blocks(lambda)?;
    let w = param.value(lambda)?;
    if w.shape() != (theta.p(), theta.p()) {
        return Err(Error::DimensionMismatch("LFT parameter size".into()));
    }
    let den = &blk.t11 + &w * &blk.t21;
    let num = &blk.t12 + &w * &blk.t22;
    let smin = crate::matcore::singular_values(&den).last().copied().unwrap_or(1.0);
    if smin <= 1e-12 * (fro(&blk.t11) + fro(&w) * fro(&blk.t21)) {
        return Err(Error::SingularDenominator(lambda));
    }
    solve(&den, &num, "LFT denominator").map_err(|_| Error::SingularDenominator(lambda))
}

/// Realization of `T_Θ(S₀)` for the one-node Θ of `step`:
/// `B_S = [B₀; η − ξ]`, `𝕏_S = diag(𝕏₀, 𝕏̃)`,
/// `A_S = [[A₀, B₀σ₁ξ*/𝕏̃], [−ησ₁B₀*𝕏₀⁻¹, −w̄ − ησ₁(η − ξ)*/𝕏̃]]`.
pub fn schur_step_realization(s0: &Realization, step: &SchurStepData) -> Result<Realization> {
    step_realization(s0, step, None)
}

fn step_realization(s0: &Realization, step: &SchurStepData, index: Option<usize>) -> Result<Realization> {
    let sigma1 = s0.sigma1();
    let p = sigma1.nrows();
    if step.p() != p {
        return Err(Error::DimensionMismatch("step width differs from S0".into()));
    }
    let xt = admissible_xtilde(step, sigma1, index)?;
    let n0 = s0.dim();
    let n = n0 + 1;
    let d = &step.eta - &step.xi;
    let xtc = c(xt, 0.0);
    let mut a = zeros(n, n);
    a.view_mut((0, 0), (n0, n0)).copy_from(s0.a1());
    // B₀ is n₀×p here, so the paper's row-block B₀ appears transposed-conjugated consistently.
    let upper = s0.b() * sigma1 * step.xi.adjoint() / xtc;
    a.view_mut((0, n0), (n0, 1)).copy_from(&upper);
    let lower = -(&step.eta * sigma1 * s0.b().adjoint() * s0.x_inv());
    a.view_mut((n0, 0), (1, n0)).copy_from(&lower);
    a[(n0, n0)] = -step.w.conj() - (&step.eta * sigma1 * d.adjoint())[(0, 0)] / xtc;
    let mut b = zeros(n, p);
    b.view_mut((0, 0), (n0, p)).copy_from(s0.b());
    b.view_mut((n0, 0), (1, p)).copy_from(&d);
    let mut x = zeros(n, n);
    x.view_mut((0, 0), (n0, n0)).copy_from(s0.x());
    x[(n0, n0)] = xtc;
    Realization::new(a, b, x, sigma1.clone())
}

/// n-step realization from S₀ ≡ I_p, steps applied in list order (the last step is outermost).
/// Uses the closed form and checks it against the iterated one-step construction.
pub fn iterate_from_identity(steps: &[SchurStepData], sigma1: &CMatrix) -> Result<Realization> {
    let p = sigma1.nrows();
    let n = steps.len();
    let mut xts = Vec::with_capacity(n);
    for (i, s) in steps.iter().enumerate() {
        if s.p() != p {
            return Err(Error::DimensionMismatch(format!("step {i} width")));
        }
        xts.push(admissible_xtilde(s, sigma1, Some(i))?);
    }
    let diffs: Vec<CMatrix> = steps.iter().map(|s| &s.eta - &s.xi).collect();
    let mut a = zeros(n, n);
    let mut b = zeros(n, p);
    let mut x = zeros(n, n);
    for i in 0..n {
        b.view_mut((i, 0), (1, p)).copy_from(&diffs[i]);
        x[(i, i)] = c(xts[i], 0.0);
        for j in 0..n {
            a[(i, j)] = if i == j {
                -steps[i].w.conj() - (&steps[i].eta * sigma1 * diffs[i].adjoint())[(0, 0)] / xts[i]
            } else if i < j {
                (&diffs[i] * sigma1 * steps[j].xi.adjoint())[(0, 0)] / xts[j]
            } else {
                -(&steps[i].eta * sigma1 * diffs[j].adjoint())[(0, 0)] / xts[j]
            };
        }
    }
    let closed = Realization::new(a, b, x, sigma1.clone())?;

    let mut iter = Realization::identity(sigma1.clone())?;
    for (i, s) in steps.iter().enumerate() {
        iter = step_realization(&iter, s, Some(i))?;
    }
    let mismatch = fro(&(closed.a1() - iter.a1())) + fro(&(closed.b() - iter.b()));
    if mismatch > 1e-10 * (1.0 + fro(closed.a1()) + fro(closed.b())) {
        return Err(Error::InternalMismatch { what: "n-step closed form", residual: mismatch });
    }
    Ok(closed)
}

/// Tangential Schur recursion: node k's data are transported through the Θ's of nodes
/// `0..k` so that each returned step is the datum seen by the k-th level parameter.
pub fn schur_recursion(steps: &[SchurStepData], sigma1: &CMatrix) -> Result<Vec<SchurStepData>> {
    let p = sigma1.nrows();
    let mut work: Vec<SchurStepData> = steps.to_vec();
    for i in 0..work.len() {
        for k in 0..i {
            if (work[k].w - work[i].w).norm() <= 1e-12 * (1.0 + work[i].w.norm()) {
                return Err(Error::DuplicateNode(i));
            }
        }
        admissible_xtilde(&work[i], sigma1, Some(i))?;
        let theta = build_theta_single(&work[i], sigma1)?;
        for k in i + 1..work.len() {
            let t = theta.eval(work[k].w)?;
            let mut v = zeros(2 * p, 1);
            v.view_mut((0, 0), (p, 1)).copy_from(&(-work[k].eta.adjoint()));
            v.view_mut((p, 0), (p, 1)).copy_from(&work[k].xi.adjoint());
            let u = t * v;
            let eta = -u.view((0, 0), (p, 1)).adjoint();
            let xi = u.view((p, 0), (p, 1)).adjoint();
            work[k] = SchurStepData::new(work[k].w, xi, eta)?;
        }
    }
    Ok(work)
}

/// Realization of the interpolant `T_{Θ₁}(T_{Θ₂}(…T_{Θ_N}(I)))` for the nodes, i.e. the
/// degree-N solution with ξᵢS(wᵢ)* = ηᵢ for every node.
pub fn interpolant_from_nodes(steps: &[SchurStepData], sigma1: &CMatrix) -> Result<Realization> {
    let mut reduced = schur_recursion(steps, sigma1)?;
    reduced.reverse();
    iterate_from_identity(&reduced, sigma1)
}

/// Search grid for [`find_admissible_direction`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub random_directions: usize,
    pub seed: u64,
}

impl Default for SearchGrid {
    fn default() -> Self {
        let re = (0..9).map(|k| 10f64.powf(-1.0 + 0.25 * k as f64)).collect();
        Self { re, im: vec![0.0, 1.0, -1.0, 3.0, -3.0, 9.0, -9.0], random_directions: 8, seed: 7 }
    }
}

/// First `(w, ξ)` on the grid with `𝕏̃ > 0` for η = ξS(w)*.
pub fn find_admissible_direction(s: &Realization, grid: &SearchGrid) -> Result<SchurStepData> {
    let p = s.p();
    let sigma1 = s.sigma1();
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    let mut dirs: Vec<CMatrix> = (0..p)
        .map(|k| {
            let mut r = zeros(1, p);
            r[(0, k)] = c(1.0, 0.0);
            r
        })
        .collect();
    for _ in 0..grid.random_directions {
        let mut r = zeros(1, p);
        for k in 0..p {
            r[(0, k)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let nr = fro(&r);
        if nr > 0.0 {
            dirs.push(r / c(nr, 0.0));
        }
    }
    for &re in &grid.re {
        for &im in &grid.im {
            let w = c(re, im);
            let sw = match s.eval_transfer(w) {
                Ok(v) => v,
                Err(Error::PoleAt(_)) => continue,
                Err(e) => return Err(e),
            };
            for xi in &dirs {
                let eta = xi * sw.adjoint();
                let step = SchurStepData::new(w, xi.clone(), eta)?;
                if let Ok(xt) = xtilde(&step, sigma1) {
                    if xt > admissibility_floor(&step, sigma1) {
                        return Ok(step);
                    }
                }
            }
        }
    }
    Err(Error::NotFound)
}

/// Inverse of Θ at λ (Θ is invertible off its spectrum and the mirrored spectrum).
pub fn theta_inverse(theta: &ThetaFunction, lambda: C64) -> Result<CMatrix> {
    let t = theta.eval(lambda)?;
    inverse(&t, "Theta").map_err(|_| Error::SingularTheta(lambda))
}
