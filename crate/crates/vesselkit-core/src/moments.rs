//! Markov moments `H_i = B*𝕏⁻¹A₁ⁱBσ₁` along trajectories, the identities they satisfy, and
//! generation of moment sequences from β alone for the SL and NLS parameter families.

use crate::error::{Error, Result};
use crate::matcore::{
    c, eigenvalues, eye, fro, inverse, kron, least_squares, solve, unvectorize, vectorize, zeros, CMatrix,
    OdeGrid, C64, I,
};
use crate::taylor::{matrix_series_inverse, matrix_series_mul, ScalarFn, Taylor};
use crate::vessel::{MatFn, VesselParams, VesselTrajectory};
use std::fmt::Write as _;
use std::sync::Arc;

/// `H_0 … H_count` at the grid point t₂.
pub fn moments_from_trajectory(traj: &VesselTrajectory, t2: f64, count: usize) -> Result<Vec<CMatrix>> {
    let k = traj.index_of(t2)?;
    Ok(traj.realization_at(k)?.markov_moments(count + 1))
}

/// `dH_i/dt₂` for `i = 0 … count` at grid index k, from the vessel right-hand sides.
pub fn moment_derivatives(traj: &VesselTrajectory, k: usize, count: usize) -> Result<Vec<CMatrix>> {
    let p = traj.p();
    if traj.dim() == 0 {
        return Ok(vec![zeros(p, p); count + 1]);
    }
    let t = traj.grid.t(k);
    let b = &traj.b[k];
    let xinv = inverse(&traj.x[k], "X")?;
    let (db, dx) = traj.derivatives_at(k);
    let s1 = traj.params.sigma1(t);
    let ds1 = traj.params.dsigma1(t);
    let left = b.adjoint() * &xinv;
    let dleft = db.adjoint() * &xinv - &left * &dx * &xinv;
    let (mut v, mut dv) = (b.clone(), db);
    let mut out = Vec::with_capacity(count + 1);
    for _ in 0..=count {
        out.push(&dleft * &v * &s1 + &left * &dv * &s1 + &left * &v * &ds1);
        v = &traj.a1 * v;
        dv = &traj.a1 * dv;
    }
    Ok(out)
}

/// ‖(γ* − γ) − (σ₂H₀ − σ₁H₀σ₁⁻¹σ₂)‖_F at a grid point.
pub fn linkage_residual(traj: &VesselTrajectory, t2: f64) -> Result<f64> {
    let k = traj.index_of(t2)?;
    let h0 = traj.realization_at(k)?.markov_moment(0);
    linkage_defect(&traj.params, traj.grid.t(k), &traj.gamma_star[k], &h0)
}

/// Linkage defect for explicitly supplied γ* and H₀.
pub fn linkage_defect(params: &VesselParams, t2: f64, gamma_star: &CMatrix, h0: &CMatrix) -> Result<f64> {
    let (s1, s2) = (params.sigma1(t2), params.sigma2(t2));
    let rhs = &s2 * h0 - &s1 * h0 * solve(&s1, &s2, "sigma1")?;
    Ok(fro(&(gamma_star - params.gamma(t2) - rhs)))
}

/// Residual of `CH_{i+1} − H_{i+1}C = H_i' − σ₁⁻¹γ*H_i + H_iσ₁⁻¹γ` with `C = σ₁⁻¹σ₂`.
pub fn recursion_residual(traj: &VesselTrajectory, t2: f64, i: usize) -> Result<f64> {
    let k = traj.index_of(t2)?;
    let t = traj.grid.t(k);
    let h = traj.realization_at(k)?.markov_moments(i + 2);
    let dh = moment_derivatives(traj, k, i)?;
    let s1 = traj.params.sigma1(t);
    let cm = solve(&s1, &traj.params.sigma2(t), "sigma1")?;
    let lhs = &cm * &h[i + 1] - &h[i + 1] * &cm;
    let out = solve(&s1, &traj.gamma_star[k], "sigma1")?;
    let inp = solve(&s1, &traj.params.gamma(t), "sigma1")?;
    let rhs = &dh[i] - out * &h[i] + &h[i] * inp;
    Ok(fro(&(lhs - rhs)))
}

/// max over i of ‖H_{i+1}σ₁⁻¹ + (−1)ⁱσ₁⁻¹H_{i+1}* − Σ_{j≤i}(−1)^{j+1}H_{i−j}σ₁⁻¹H_j*‖_F.
pub fn algebraic_residual(moments: &[CMatrix], sigma1: &CMatrix) -> Result<f64> {
    if moments.len() < 2 {
        return Ok(0.0);
    }
    let s1inv = inverse(sigma1, "sigma1")?;
    let mut worst: f64 = 0.0;
    for i in 0..moments.len() - 1 {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let h = &moments[i + 1];
        let mut r = h * &s1inv + (&s1inv * h.adjoint()).scale(sign);
        for j in 0..=i {
            let sj = if j % 2 == 0 { -1.0 } else { 1.0 };
            r -= (&moments[i - j] * &s1inv * moments[j].adjoint()).scale(sj);
        }
        worst = worst.max(fro(&r));
    }
    Ok(worst)
}

/// Coefficients `c_0 … c_n` (constant term first) of the monic characteristic polynomial.
pub fn characteristic_polynomial(a: &CMatrix) -> Vec<C64> {
    let mut coef = vec![c(1.0, 0.0)];
    for e in eigenvalues(a) {
        let mut next = vec![c(0.0, 0.0); coef.len() + 1];
        for (j, &cj) in coef.iter().enumerate() {
            next[j + 1] += cj;
            next[j] -= cj * e;
        }
        coef = next;
    }
    coef
}

/// Cayley–Hamilton relation `Σ_j c_j H_{j+m} = 0` for `m = 0 … extra`, relative to the
/// magnitude of the summands; the maximum over m.
pub fn hlin_residual(traj: &VesselTrajectory, t2: f64, extra: usize) -> Result<f64> {
    let k = traj.index_of(t2)?;
    let n = traj.dim();
    let coef = characteristic_polynomial(&traj.a1);
    let h = traj.realization_at(k)?.markov_moments(n + extra + 1);
    let p = traj.p();
    let mut worst: f64 = 0.0;
    for m in 0..=extra {
        let mut s = zeros(p, p);
        let mut scale = 0.0;
        for (j, &cj) in coef.iter().enumerate() {
            s += &h[j + m] * cj;
            scale += cj.norm() * fro(&h[j + m]);
        }
        if scale > 0.0 {
            worst = worst.max(fro(&s) / scale);
        }
    }
    Ok(worst)
}

/// Result of solving `CH − HC = RHS`.
#[derive(Debug, Clone)]
pub struct CommutatorSolveReport {
    /// Kernel dimension of `H ↦ CH − HC`.
    pub n0: usize,
    /// Minimum-norm solution.
    pub particular: CMatrix,
    /// Orthonormal (in Frobenius norm) basis of the kernel.
    pub nullspace_basis: Vec<CMatrix>,
    pub range_residual: f64,
}

/// Solves `CH − HC = RHS` through the vectorized operator `I⊗C − Cᵀ⊗I`.
pub fn solve_commutator_step(cm: &CMatrix, rhs: &CMatrix) -> Result<CommutatorSolveReport> {
    let p = cm.nrows();
    if cm.ncols() != p || rhs.shape() != (p, p) {
        return Err(Error::DimensionMismatch("commutator operands must be square and equal size".into()));
    }
    let op = kron(&eye(p), cm) - kron(&cm.transpose(), &eye(p));
    let ls = least_squares(&op, &vectorize(rhs), 1e-10);
    if ls.residual > 1e-9 * fro(rhs) {
        return Err(Error::NotInRange { residual: ls.residual });
    }
    Ok(CommutatorSolveReport {
        n0: p * p - ls.rank,
        particular: unvectorize(&ls.x, p, p),
        nullspace_basis: ls.nullspace.iter().map(|v| unvectorize(v, p, p)).collect(),
        range_residual: ls.residual,
    })
}

/// Moments `H_0 … H_K` at every point of a grid.
#[derive(Debug, Clone)]
pub struct MomentSequence {
    pub grid: OdeGrid,
    /// `h[k][i]` is H_i at grid point k.
    pub h: Vec<Vec<CMatrix>>,
}

impl MomentSequence {
    pub fn levels(&self) -> usize {
        self.h.first().map_or(0, |v| v.len())
    }

    /// CSV with columns `t2,i,row,col,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t2,i,row,col,re,im\n");
        for (k, hs) in self.h.iter().enumerate() {
            let t = self.grid.t(k);
            for (i, m) in hs.iter().enumerate() {
                for r in 0..m.nrows() {
                    for col in 0..m.ncols() {
                        let z = m[(r, col)];
                        let _ = writeln!(out, "{t:?},{i},{r},{col},{:?},{:?}", z.re, z.im);
                    }
                }
            }
        }
        out
    }

    /// max over grid and levels of ‖H − H_other‖_F.
    pub fn max_difference(&self, other: &MomentSequence) -> Result<f64> {
        if self.h.len() != other.h.len() || self.levels() != other.levels() {
            return Err(Error::DimensionMismatch("moment sequences of different shape".into()));
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.h.iter().zip(&other.h) {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max(fro(&(x - y)));
            }
        }
        Ok(worst)
    }
}

/// Free data of the SL recursion for each level: the trace constant / initial trace and the
/// initial value of H²¹, both at the first grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SlInitial {
    pub trace: Vec<C64>,
    pub h21: Vec<C64>,
}

/// Initial values of the diagonal entries for each NLS level at the first grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct NlsInitial {
    pub h11: Vec<C64>,
    pub h22: Vec<C64>,
}

/// Integrates along the grid given the Taylor jet of the right side at every grid point.
/// Values use the two-point Hermite rule of order six; the returned jets are the
/// antiderivatives of the right-side jets.
fn integrate_jets(grid: &OdeGrid, ic: C64, rhs: &[Taylor]) -> Result<Vec<Taylor>> {
    if rhs.iter().any(|r| r.len() < 3) {
        return Err(Error::InvalidArgument("jet order too low for the requested number of levels".into()));
    }
    let h = grid.h();
    let mut v = ic;
    let mut out = Vec::with_capacity(rhs.len());
    out.push(rhs[0].integral(v));
    for k in 0..rhs.len() - 1 {
        let (f0, f1) = (&rhs[k].0, &rhs[k + 1].0);
        v += (f0[0] + f1[0]) * (h / 2.0) + (f0[1] - f1[1]) * (h * h / 10.0) + (f0[2] + f1[2]) * (2.0 * h.powi(3) / 120.0);
        out.push(rhs[k + 1].integral(v));
    }
    Ok(out)
}

fn zip_map<F>(a: &[Taylor], b: &[Taylor], f: F) -> Vec<Taylor>
where
    F: Fn(&Taylor, &Taylor) -> Taylor,
{
    a.iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

fn values_2x2(h11: &[Taylor], h12: &[Taylor], h21: &[Taylor], h22: &[Taylor], k: usize) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[h11[k].value(), h12[k].value(), h21[k].value(), h22[k].value()])
}

fn beta_jets(beta: &dyn ScalarFn, grid: &OdeGrid, len: usize) -> Result<Vec<Taylor>> {
    grid.times().iter().map(|&t| beta.taylor(t, len - 1)).collect()
}

/// SL moments `H_0 … H_{levels−1}` from β.
///
/// Level 0 has `H¹² = −β`, `H¹¹ − H²² = −iπ₁₁` and constant trace; H²¹ solves
/// `2i(H²¹)' = (H¹¹)'' − 2β(H¹¹)'`. Each further level takes
/// `K¹² = −(H¹¹)' + βH¹¹ + iH²¹`, `K¹¹ − K²² = (H²¹)' + iπ₁₁H¹¹ + βH²¹`,
/// `(K¹¹ + K²²)' = β(K¹¹ − K²²) − iπ₁₁K¹²` and the same equation for K²¹.
pub fn generate_moments_sl(beta: &dyn ScalarFn, grid: &OdeGrid, init: &SlInitial, levels: usize) -> Result<MomentSequence> {
    if init.trace.len() < levels || init.h21.len() < levels {
        return Err(Error::InvalidArgument(format!("need {levels} initial conditions per kind")));
    }
    let len = 2 * levels + 4;
    let beta = beta_jets(beta, grid, len)?;
    let pi: Vec<Taylor> = beta.iter().map(|b| &b.diff() - &(b * b)).collect();
    let half = c(0.5, 0.0);
    let lower = |h11: &[Taylor], ic: C64| -> Result<Vec<Taylor>> {
        let rhs: Vec<Taylor> = h11
            .iter()
            .zip(&beta)
            .map(|(a, b)| {
                let d1 = a.diff();
                (&d1.diff() - &(b * &d1).scale(c(2.0, 0.0))).scale(c(0.0, -0.5))
            })
            .collect();
        integrate_jets(grid, ic, &rhs)
    };
    let n = grid.len();
    let mut out: Vec<Vec<CMatrix>> = vec![Vec::with_capacity(levels); n];
    if levels == 0 {
        return Ok(MomentSequence { grid: *grid, h: out });
    }
    let mut h12: Vec<Taylor> = pi.iter().zip(&beta).map(|(p, b)| -&b.truncate(p.len())).collect();
    let mut h11: Vec<Taylor> = pi
        .iter()
        .map(|p| (&Taylor::constant(init.trace[0], p.len()) - &p.scale(I)).scale(half))
        .collect();
    let mut h22: Vec<Taylor> = pi
        .iter()
        .map(|p| (&Taylor::constant(init.trace[0], p.len()) + &p.scale(I)).scale(half))
        .collect();
    let mut h21 = lower(&h11, init.h21[0])?;
    for k in 0..n {
        out[k].push(values_2x2(&h11, &h12, &h21, &h22, k));
    }
    for m in 1..levels {
        let k12: Vec<Taylor> = (0..n)
            .map(|k| &(&(&beta[k] * &h11[k]) - &h11[k].diff()) + &h21[k].scale(I))
            .collect();
        let dd: Vec<Taylor> = (0..n)
            .map(|k| &(&h21[k].diff() + &(&pi[k] * &h11[k]).scale(I)) + &(&beta[k] * &h21[k]))
            .collect();
        let trhs: Vec<Taylor> = (0..n)
            .map(|k| &(&beta[k] * &dd[k]) - &(&pi[k] * &k12[k]).scale(I))
            .collect();
        let tr = integrate_jets(grid, init.trace[m], &trhs)?;
        h11 = zip_map(&tr, &dd, |t, d| (t + d).scale(half));
        h22 = zip_map(&tr, &dd, |t, d| (t - d).scale(half));
        h12 = k12;
        h21 = lower(&h11, init.h21[m])?;
        for k in 0..n {
            out[k].push(values_2x2(&h11, &h12, &h21, &h22, k));
        }
    }
    Ok(MomentSequence { grid: *grid, h: out })
}

/// NLS moments `H_0 … H_{levels−1}` from β: `H₀¹² = β`, `H₀²¹ = β̄`,
/// `Hₙ²¹ = −(Hₙ₋₁²¹)' − β̄Hₙ₋₁¹¹`, `Hₙ¹² = (Hₙ₋₁¹²)' − βHₙ₋₁²²`,
/// `(Hₙ¹¹)' = βHₙ²¹`, `(Hₙ²²)' = −β̄Hₙ¹²`.
pub fn generate_moments_nls(beta: &dyn ScalarFn, grid: &OdeGrid, init: &NlsInitial, levels: usize) -> Result<MomentSequence> {
    if init.h11.len() < levels || init.h22.len() < levels {
        return Err(Error::InvalidArgument(format!("need {levels} initial conditions per kind")));
    }
    let len = levels + 4;
    let beta = beta_jets(beta, grid, len)?;
    let bbar: Vec<Taylor> = beta.iter().map(|b| b.conj()).collect();
    let n = grid.len();
    let mut out: Vec<Vec<CMatrix>> = vec![Vec::with_capacity(levels); n];
    let mut h12: Vec<Taylor> = beta.clone();
    let mut h21: Vec<Taylor> = bbar.clone();
    let diag = |h12: &[Taylor], h21: &[Taylor], m: usize| -> Result<(Vec<Taylor>, Vec<Taylor>)> {
        let r11 = zip_map(&beta, h21, |b, x| b * x);
        let r22 = zip_map(&bbar, h12, |b, x| -&(b * x));
        Ok((integrate_jets(grid, init.h11[m], &r11)?, integrate_jets(grid, init.h22[m], &r22)?))
    };
    let mut diag_prev: Option<(Vec<Taylor>, Vec<Taylor>)> = None;
    for m in 0..levels {
        if m > 0 {
            let (p11, p22) = diag_prev.take().expect("previous level");
            let n21: Vec<Taylor> = (0..n).map(|k| -&(&h21[k].diff() + &(&bbar[k] * &p11[k]))).collect();
            let n12: Vec<Taylor> = (0..n).map(|k| &h12[k].diff() - &(&beta[k] * &p22[k])).collect();
            h21 = n21;
            h12 = n12;
        }
        let (h11, h22) = diag(&h12, &h21, m)?;
        for k in 0..n {
            out[k].push(values_2x2(&h11, &h12, &h21, &h22, k));
        }
        diag_prev = Some((h11, h22));
    }
    Ok(MomentSequence { grid: *grid, h: out })
}

/// `γ* = γ + σ₂H₀ − σ₁H₀σ₁⁻¹σ₂`, validated against `γ* + γ*^* + σ₁' = 0` on sample points.
pub fn gamma_star_from_h0(params: &VesselParams, h0: MatFn) -> Result<MatFn> {
    let p = params.clone();
    let f: MatFn = Arc::new(move |t| {
        let (s1, s2) = (p.sigma1(t), p.sigma2(t));
        let h = h0(t);
        let s1inv = inverse(&s1, "sigma1").expect("sigma1 validated invertible");
        p.gamma(t) + &s2 * &h - &s1 * &h * s1inv * &s2
    });
    let (a, b) = params.interval;
    for k in 0..17 {
        let t = a + (b - a) * k as f64 / 16.0;
        let g = f(t);
        let residual = fro(&(&g + g.adjoint() + params.dsigma1(t)));
        if residual > 1e-9 * (1.0 + fro(&g)) {
            return Err(Error::ConstraintViolated { residual });
        }
    }
    Ok(f)
}

/// Taylor coefficients of H₀ at grid index k for a trajectory with constant parameters,
/// from the exact series of B and 𝕏 implied by the vessel equations.
pub fn h0_taylor(traj: &VesselTrajectory, k: usize, order: usize) -> Result<Vec<CMatrix>> {
    if !traj.params.is_constant() {
        return Err(Error::InvalidArgument("H0 series needs constant vessel parameters".into()));
    }
    let t = traj.grid.t(k);
    let (s1, s2, g) = (traj.params.sigma1(t), traj.params.sigma2(t), traj.params.gamma(t));
    let p = traj.p();
    if traj.dim() == 0 {
        return Ok(vec![zeros(p, p); order + 1]);
    }
    let s1inv = inverse(&s1, "sigma1")?;
    let mut bs = vec![traj.b[k].clone()];
    for j in 0..order {
        let next = (-(&traj.a1 * &bs[j] * &s2) - &bs[j] * &g) * &s1inv;
        bs.push(next / c((j + 1) as f64, 0.0));
    }
    let mut xs = vec![traj.x[k].clone()];
    for j in 0..order {
        let mut s = zeros(traj.dim(), traj.dim());
        for l in 0..=j {
            s += &bs[l] * &s2 * bs[j - l].adjoint();
        }
        xs.push(s / c((j + 1) as f64, 0.0));
    }
    let xinv = matrix_series_inverse(&xs, &inverse(&traj.x[k], "X")?);
    let bstar: Vec<CMatrix> = bs.iter().map(|b| b.adjoint()).collect();
    let bs1: Vec<CMatrix> = bs.iter().map(|b| b * &s1).collect();
    Ok(matrix_series_mul(&matrix_series_mul(&bstar, &xinv), &bs1))
}

/// Which parameter family a trajectory-derived β belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaKind {
    /// β = −H₀¹².
    Sl,
    /// β = H₀¹².
    Nls,
}

/// β read off a trajectory's H₀ at grid points, with exact Taylor coefficients.
#[derive(Debug, Clone)]
pub struct TrajectoryBeta {
    pub traj: Arc<VesselTrajectory>,
    pub kind: BetaKind,
}

impl ScalarFn for TrajectoryBeta {
    fn taylor(&self, t: f64, order: usize) -> Result<Taylor> {
        let k = self.traj.index_of(t)?;
        let series = h0_taylor(&self.traj, k, order)?;
        let sign = match self.kind {
            BetaKind::Sl => -1.0,
            BetaKind::Nls => 1.0,
        };
        Ok(Taylor(series.iter().map(|m| m[(0, 1)] * sign).collect()))
    }
}

/// SL initial data read from a trajectory at its first grid point.
pub fn sl_initial_from_trajectory(traj: &VesselTrajectory, levels: usize) -> Result<SlInitial> {
    let h = moments_from_trajectory(traj, traj.grid.t_start, levels)?;
    Ok(SlInitial {
        trace: h.iter().map(|m| m[(0, 0)] + m[(1, 1)]).collect(),
        h21: h.iter().map(|m| m[(1, 0)]).collect(),
    })
}

/// NLS initial data read from a trajectory at its first grid point.
pub fn nls_initial_from_trajectory(traj: &VesselTrajectory, levels: usize) -> Result<NlsInitial> {
    let h = moments_from_trajectory(traj, traj.grid.t_start, levels)?;
    Ok(NlsInitial { h11: h.iter().map(|m| m[(0, 0)]).collect(), h22: h.iter().map(|m| m[(1, 1)]).collect() })
}

/// Moments of every grid point of a trajectory, levels `0 … levels−1`.
pub fn trajectory_moment_sequence(traj: &VesselTrajectory, levels: usize) -> Result<MomentSequence> {
    let h = (0..traj.grid.len())
        .map(|k| Ok(traj.realization_at(k)?.markov_moments(levels)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentSequence { grid: traj.grid, h })
}
