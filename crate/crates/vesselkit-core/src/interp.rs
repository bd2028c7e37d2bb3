//! Nevanlinna–Pick interpolation in the vessel class: feasibility, the same-t₂ solver, the
//! positive pair `W = [I S]Θ⁻¹` and a verifier for data given at several values of t₂.

use crate::error::{Error, Result};
use crate::json::{complex_from_json, complex_to_json, row_from_json, row_to_json, ComplexJson};
use crate::matcore::{
    fro, hermitian_eigenvalues, hermitian_part, solve, zeros, CMatrix, OdeGrid, C64,
};
use crate::realization::{lyapunov_solve, Realization};
use crate::schur::{
    build_theta_multi, interpolant_from_nodes, schur_step_realization, signature_j, xtilde, SchurStepData,
    ThetaFunction,
};
use crate::vessel::{
    b_via_contour, evolve_vessel, similarity_fit, ContourSpec, MatFn, VesselParams, VesselTrajectory,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Smallest Gram eigenvalue accepted as positive.
pub const FEASIBILITY_FLOOR: f64 = 1e-8;

/// Interpolation node `ξ S(w, t₂)* = η` imposed at t₂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NodeJson", into = "NodeJson")]
pub struct InterpNode {
    pub step: SchurStepData,
    pub t2: f64,
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    w: ComplexJson,
    xi: Vec<ComplexJson>,
    eta: Vec<ComplexJson>,
    t2: f64,
}

impl TryFrom<NodeJson> for InterpNode {
    type Error = Error;
    fn try_from(j: NodeJson) -> Result<Self> {
        InterpNode::new(complex_from_json(j.w), row_from_json(&j.xi), row_from_json(&j.eta), j.t2)
    }
}

impl From<InterpNode> for NodeJson {
    fn from(n: InterpNode) -> Self {
        Self { w: complex_to_json(n.step.w), xi: row_to_json(&n.step.xi), eta: row_to_json(&n.step.eta), t2: n.t2 }
    }
}

impl InterpNode {
    pub fn new(w: C64, xi: CMatrix, eta: CMatrix, t2: f64) -> Result<Self> {
        if fro(&xi) == 0.0 {
            return Err(Error::InvalidArgument("node direction xi must be nonzero".into()));
        }
        if !t2.is_finite() {
            return Err(Error::NonFinite("node t2"));
        }
        Ok(Self { step: SchurStepData::new(w, xi, eta)?, t2 })
    }

    /// Scalar node (p = 1).
    pub fn scalar(w: C64, xi: C64, eta: C64, t2: f64) -> Result<Self> {
        Self::new(w, CMatrix::from_element(1, 1, xi), CMatrix::from_element(1, 1, eta), t2)
    }
}

/// Interpolation problem for vessels with the given parameters.
#[derive(Debug, Clone)]
pub struct NpProblem {
    pub params: VesselParams,
    pub nodes: Vec<InterpNode>,
    pub t2_ref: f64,
}

impl NpProblem {
    pub fn new(params: VesselParams, nodes: Vec<InterpNode>, t2_ref: f64) -> Result<Self> {
        let (a, b) = params.interval;
        let p = params.p();
        for (i, n) in nodes.iter().enumerate() {
            if n.step.p() != p {
                return Err(Error::DimensionMismatch(format!("node {i} width {} vs p = {p}", n.step.p())));
            }
            if n.t2 < a || n.t2 > b {
                return Err(Error::InvalidArgument(format!("node {i} t2 = {} outside [{a}, {b}]", n.t2)));
            }
        }
        if t2_ref < a || t2_ref > b {
            return Err(Error::InvalidArgument(format!("t2_ref = {t2_ref} outside [{a}, {b}]")));
        }
        Ok(Self { params, nodes, t2_ref })
    }

    pub fn steps(&self) -> Vec<SchurStepData> {
        self.nodes.iter().map(|n| n.step.clone()).collect()
    }

    fn sigma1(&self) -> CMatrix {
        self.params.sigma1(self.t2_ref)
    }
}

/// Result of [`feasibility_same_t2`].
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub xtildes: Vec<f64>,
    pub gram: CMatrix,
    pub lambda_min: f64,
    pub feasible: bool,
}

/// Gram matrix of the node data: the solution of `A𝕏 + 𝕏A* + BJB* = 0` with
/// `A = diag(−w̄ᵢ)` and rows `[−ηᵢ ξᵢ]` of B.
pub fn node_gram(steps: &[SchurStepData], sigma1: &CMatrix) -> Result<CMatrix> {
    let p = sigma1.nrows();
    let n = steps.len();
    let mut a = zeros(n, n);
    let mut b = zeros(n, 2 * p);
    for (i, s) in steps.iter().enumerate() {
        a[(i, i)] = -s.w.conj();
        b.view_mut((i, 0), (1, p)).copy_from(&(-&s.eta));
        b.view_mut((i, p), (1, p)).copy_from(&s.xi);
    }
    Ok(hermitian_part(&lyapunov_solve(&a, &b, &signature_j(sigma1))?))
}

/// Per-node 𝕏̃ᵢ and the Gram matrix for nodes sharing t₂ = t2_ref.
pub fn feasibility_same_t2(prob: &NpProblem) -> Result<FeasibilityReport> {
    for (i, n) in prob.nodes.iter().enumerate() {
        if (n.t2 - prob.t2_ref).abs() > 1e-12 * (1.0 + prob.t2_ref.abs()) {
            return Err(Error::InvalidArgument(format!("node {i} is not at t2_ref")));
        }
        for o in &prob.nodes[..i] {
            let same_w = (o.step.w - n.step.w).norm() <= 1e-12 * (1.0 + n.step.w.norm());
            let same_data = fro(&(&o.step.xi - &n.step.xi)) + fro(&(&o.step.eta - &n.step.eta)) <= 1e-12;
            if same_w && !same_data {
                return Err(Error::DuplicateNode(i));
            }
        }
    }
    let sigma1 = prob.sigma1();
    let steps = prob.steps();
    let xtildes = steps.iter().map(|s| xtilde(s, &sigma1)).collect::<Result<Vec<_>>>()?;
    let gram = node_gram(&steps, &sigma1)?;
    let lambda_min = hermitian_eigenvalues(&gram).first().copied().unwrap_or(f64::INFINITY);
    Ok(FeasibilityReport { xtildes, gram, lambda_min, feasible: lambda_min > FEASIBILITY_FLOOR })
}

/// max over nodes of ‖ξᵢS(wᵢ)* − ηᵢ‖.
pub fn node_residual(s: &Realization, steps: &[SchurStepData]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for st in steps {
        let v = &st.xi * s.eval_transfer(st.w)?.adjoint();
        worst = worst.max(fro(&(v - &st.eta)));
    }
    Ok(worst)
}

/// Solution of a same-t₂ problem: the interpolant at t2_ref and its evolution over the grid.
#[derive(Debug, Clone)]
pub struct NpSolution {
    pub realization: Realization,
    pub trajectory: VesselTrajectory,
    pub feasibility: FeasibilityReport,
}

/// Builds the degree-N interpolant at t2_ref (free parameter S₀ ≡ I) and evolves it.
pub fn solve_same_t2(prob: &NpProblem, grid: &OdeGrid) -> Result<NpSolution> {
    let feasibility = feasibility_same_t2(prob)?;
    if !feasibility.feasible {
        return Err(Error::Infeasible { lambda_min: feasibility.lambda_min });
    }
    let realization = interpolant_from_nodes(&prob.steps(), &prob.sigma1())?;
    let trajectory = evolve_vessel(&realization, &prob.params, prob.t2_ref, grid)?;
    Ok(NpSolution { realization, trajectory, feasibility })
}

/// Node data carried along t₂: `ξ(t) = ξΦ(w,t,t₀)*`, `η(t) = ηΦ*(w,t,t₀)*`, which keeps
/// `ξ(t)S(w,t)* = η(t)` whenever it holds at t₀.
pub fn transported_node(traj: &VesselTrajectory, step: &SchurStepData, t2: f64) -> Result<SchurStepData> {
    let t0 = traj.t2_0;
    let phi = traj.phi(step.w, t0, t2)?;
    let phis = traj.phi_star(step.w, t0, t2)?;
    SchurStepData::new(step.w, &step.xi * phi.adjoint(), &step.eta * phis.adjoint())
}

/// max over nodes and sample points of the transported interpolation defect, relative to ‖η(t)‖ + 1.
pub fn transported_residual(traj: &VesselTrajectory, steps: &[SchurStepData], t2s: &[f64]) -> Result<f64> {
    let pairs: Vec<(usize, f64)> = (0..steps.len()).flat_map(|i| t2s.iter().map(move |&t| (i, t))).collect();
    let vals: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(i, t)| {
            let moved = transported_node(traj, &steps[i], t)?;
            let s = traj.eval_s(moved.w, t)?;
            Ok(fro(&(&moved.xi * s.adjoint() - &moved.eta)) / (1.0 + fro(&moved.eta)))
        })
        .collect();
    vals.into_iter().try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}

/// Θ of the nodes evolved over the grid of `s_traj` under the doubled parameters
/// `Σ₁ = diag(−σ₁, σ₁)`, `Σ₂ = diag(−σ₂, σ₂)`, `Γ = diag(−γ*, γ)` with γ* from `s_traj`.
pub fn theta_trajectory(steps: &[SchurStepData], s_traj: &VesselTrajectory) -> Result<VesselTrajectory> {
    let t0 = s_traj.t2_0;
    let sigma1 = s_traj.params.sigma1(t0);
    let theta = build_theta_multi(steps, &sigma1)?;
    let (lo, hi) = (s_traj.grid.t_start, s_traj.grid.t_end);
    let src = Arc::new(s_traj.clone());
    let gamma_star: MatFn = Arc::new(move |t| {
        src.gamma_star_at(t.clamp(lo, hi)).expect("clamped to the trajectory grid")
    });
    let mut params = s_traj.params.clone();
    params.interval = (lo, hi);
    let doubled = params.doubled(gamma_star)?;
    evolve_vessel(&theta.realization, &doubled, t0, &s_traj.grid)
}

/// Positive pair `W(λ,t₂) = [I S(λ,t₂)]Θ(λ,t₂)⁻¹` from trajectories of Θ and S on one grid.
#[derive(Debug, Clone, Copy)]
pub struct PositivePair<'a> {
    pub theta: &'a VesselTrajectory,
    pub s: &'a VesselTrajectory,
}

/// `[W₁ W₂]` and the identity defects at one point.
#[derive(Debug, Clone)]
pub struct PairValue {
    pub w1: CMatrix,
    pub w2: CMatrix,
    /// ‖W₁Θ₁₁ + W₂Θ₂₁ − I‖_F + ‖W₁Θ₁₂ + W₂Θ₂₂ − S‖_F.
    pub identity_residual: f64,
}

impl<'a> PositivePair<'a> {
    pub fn new(theta: &'a VesselTrajectory, s: &'a VesselTrajectory) -> Result<Self> {
        if theta.p() != 2 * s.p() || theta.grid != s.grid {
            return Err(Error::DimensionMismatch("Theta and S trajectories do not match".into()));
        }
        Ok(Self { theta, s })
    }

    fn theta_at(&self, t2: f64) -> Result<ThetaFunction> {
        Ok(ThetaFunction { realization: self.theta.snapshot(t2)? })
    }

    fn raw_w(&self, theta: &ThetaFunction, lambda: C64, t2: f64) -> Result<CMatrix> {
        let p = self.s.p();
        let th = theta.eval(lambda)?;
        let mut row = zeros(p, 2 * p);
        row.view_mut((0, 0), (p, p)).fill_with_identity();
        row.view_mut((0, p), (p, p)).copy_from(&self.s.eval_s(lambda, t2)?);
        // W Θ = [I S]  ⇔  Θ* W* = [I S]*.
        Ok(solve(&th.adjoint(), &row.adjoint(), "Theta").map_err(|_| Error::SingularTheta(lambda))?.adjoint())
    }

    /// W at λ. Θ⁻¹ has poles at the nodes, where the singularity of W is removable; near
    /// them W is taken as the mean over a small circle (exact for analytic W).
    pub fn eval(&self, lambda: C64, t2: f64) -> Result<PairValue> {
        let p = self.s.p();
        let theta = self.theta_at(t2)?;
        let rho = 1e-2 * (1.0 + lambda.norm());
        let near_zero = theta.realization.spectrum().iter().any(|e| (lambda + e.conj()).norm() < rho);
        let w = if near_zero {
            let nodes = 16;
            let mut acc = zeros(p, 2 * p);
            for k in 0..nodes {
                let phase = std::f64::consts::PI * (2 * k + 1) as f64 / nodes as f64;
                acc += self.raw_w(&theta, lambda + C64::from_polar(2.0 * rho, phase), t2)?;
            }
            acc / C64::new(nodes as f64, 0.0)
        } else {
            self.raw_w(&theta, lambda, t2)?
        };
        let th = theta.eval(lambda)?;
        let s = self.s.eval_s(lambda, t2)?;
        let w1 = w.view((0, 0), (p, p)).into_owned();
        let w2 = w.view((0, p), (p, p)).into_owned();
        let t = |r, c_| th.view((r * p, c_ * p), (p, p)).into_owned();
        let e1 = &w1 * t(0, 0) + &w2 * t(1, 0) - CMatrix::identity(p, p);
        let e2 = &w1 * t(0, 1) + &w2 * t(1, 1) - &s;
        Ok(PairValue { w1, w2, identity_residual: fro(&e1) + fro(&e2) })
    }

    /// `W(λ) M W(μ)* / (λ + μ̄)` for a 2p×2p weight M.
    pub fn kernel_weighted(&self, lambda: C64, mu: C64, t2: f64, weight: &CMatrix) -> Result<CMatrix> {
        let a = self.eval(lambda, t2)?;
        let b = self.eval(mu, t2)?;
        let p = self.s.p();
        let mut wa = zeros(p, 2 * p);
        wa.view_mut((0, 0), (p, p)).copy_from(&a.w1);
        wa.view_mut((0, p), (p, p)).copy_from(&a.w2);
        let mut wb = zeros(p, 2 * p);
        wb.view_mut((0, 0), (p, p)).copy_from(&b.w1);
        wb.view_mut((0, p), (p, p)).copy_from(&b.w2);
        Ok(wa * weight * wb.adjoint() / (lambda + mu.conj()))
    }

    /// `W(λ) diag(σ₁, −σ₁) W(μ)* / (λ + μ̄)`.
    pub fn kernel(&self, lambda: C64, mu: C64, t2: f64) -> Result<CMatrix> {
        let s1 = self.s.params.sigma1(t2);
        self.kernel_weighted(lambda, mu, t2, &(-signature_j(&s1)))
    }

    /// Block Gram matrix of the kernel at the points, with its smallest eigenvalue.
    pub fn kernel_gram(&self, points: &[C64], t2: f64) -> Result<(CMatrix, f64)> {
        let p = self.s.p();
        let n = points.len();
        let mut g = zeros(n * p, n * p);
        for (i, &l) in points.iter().enumerate() {
            for (j, &m) in points.iter().enumerate() {
                g.view_mut((i * p, j * p), (p, p)).copy_from(&self.kernel(l, m, t2)?);
            }
        }
        let g = hermitian_part(&g);
        let lmin = hermitian_eigenvalues(&g).first().copied().unwrap_or(0.0);
        Ok((g, lmin))
    }
}

/// Candidate data for one node of a several-t₂ problem: the parameter realization S₀ at the
/// node's t₂ (with σ₁(t₂)) and the node itself.
#[derive(Debug, Clone)]
pub struct MultiT2Candidate {
    pub s0: Realization,
    pub node: InterpNode,
}

/// Settings of [`multi_t2_verify`].
#[derive(Debug, Clone, Copy)]
pub struct MultiT2Options {
    pub grid_steps: usize,
    pub contour_nodes: usize,
    pub contour_ode_steps: usize,
    pub similarity_tol: f64,
    pub contour_tol: f64,
}

impl Default for MultiT2Options {
    fn default() -> Self {
        Self { grid_steps: 200, contour_nodes: 64, contour_ode_steps: 200, similarity_tol: 1e-6, contour_tol: 1e-5 }
    }
}

/// Checks for one ordered pair of nodes (i transported to the t₂ of j).
#[derive(Debug, Clone)]
pub struct PairCheck {
    pub i: usize,
    pub j: usize,
    pub similarity_residual: f64,
    pub x_residual: f64,
    pub contour_residual: f64,
    pub failure: Option<String>,
    pub ok: bool,
}

/// Result of [`multi_t2_verify`].
#[derive(Debug, Clone)]
pub struct MultiT2Report {
    pub pairs: Vec<PairCheck>,
    /// Per node: 𝕏ᵢ stays invertible over the whole interval.
    pub invertible: Vec<bool>,
    pub verdict: bool,
}

/// Verifies the solvability conditions for nodes at different t₂: the one-step realizations
/// `Rᵢ = T_{Θᵢ}(S₀ⁱ)` must be pairwise similar once transported to a common t₂, the contour
/// formula must reproduce the transported B, and 𝕏ᵢ must stay invertible.
pub fn multi_t2_verify(
    candidates: &[MultiT2Candidate],
    params: &VesselParams,
    opts: &MultiT2Options,
) -> Result<MultiT2Report> {
    let grid = OdeGrid::new(params.interval.0, params.interval.1, opts.grid_steps)?;
    let mut dims = None;
    let mut reals = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let r = schur_step_realization(&cand.s0, &cand.node.step)?;
        if *dims.get_or_insert((r.dim(), r.p())) != (r.dim(), r.p()) {
            return Err(Error::DimensionMismatch("candidate blocks differ in size".into()));
        }
        reals.push(r);
    }
    let trajs: Vec<Result<VesselTrajectory>> = reals
        .par_iter()
        .zip(candidates)
        .map(|(r, cand)| evolve_vessel(r, params, grid.t(grid.index_of(cand.node.t2)?), &grid))
        .collect();
    let trajs = trajs.into_iter().collect::<Result<Vec<_>>>()?;
    let invertible: Vec<bool> = trajs.iter().map(|t| !t.truncated && t.grid == grid).collect();

    let index_pairs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|i| (0..candidates.len()).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let pairs: Vec<PairCheck> = index_pairs
        .par_iter()
        .map(|&(i, j)| check_pair(i, j, &reals, &trajs, candidates, params, opts))
        .collect();
    let verdict = invertible.iter().all(|&b| b) && pairs.iter().all(|p| p.ok);
    Ok(MultiT2Report { pairs, invertible, verdict })
}

fn check_pair(
    i: usize,
    j: usize,
    reals: &[Realization],
    trajs: &[VesselTrajectory],
    candidates: &[MultiT2Candidate],
    params: &VesselParams,
    opts: &MultiT2Options,
) -> PairCheck {
    let mut out = PairCheck {
        i,
        j,
        similarity_residual: f64::INFINITY,
        x_residual: f64::INFINITY,
        contour_residual: f64::INFINITY,
        failure: None,
        ok: false,
    };
    let tj = candidates[j].node.t2;
    let moved = match trajs[i].snapshot(tj) {
        Ok(r) => r,
        Err(e) => {
            out.failure = Some(e.to_string());
            return out;
        }
    };
    let sim = match similarity_fit(&reals[j], &moved) {
        Ok(s) => s,
        Err(e) => {
            out.failure = Some(e.to_string());
            return out;
        }
    };
    out.similarity_residual = sim.residual;
    out.x_residual = sim.x_residual;
    let quad = ContourSpec::enclosing(reals[i].a1(), opts.contour_nodes);
    match b_via_contour(&reals[i], params, candidates[i].node.t2, tj, quad, opts.contour_ode_steps) {
        Ok(b) => {
            let target = &sim.v * reals[j].b();
            out.contour_residual = fro(&(b - &target)) / (1.0 + fro(&target));
        }
        Err(e) => {
            out.failure = Some(e.to_string());
            return out;
        }
    }
    out.ok = out.similarity_residual <= opts.similarity_tol
        && out.x_residual <= opts.similarity_tol
        && out.contour_residual <= opts.contour_tol;
    out
}
