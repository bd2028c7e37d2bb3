//! Concrete vessel-parameter families: Sturm–Liouville and non-linear Schrödinger.

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::matcore::{c, complex_matrix, fro, real_matrix, rk4_step, CMatrix, C64, I};
use crate::moments::moment_derivatives;
use crate::taylor::{LogDerivative, ScalarFn};
use crate::vessel::{VesselParams, VesselTrajectory};
use std::sync::Arc;

fn real_value(z: C64) -> Result<f64> {
    if z.im.abs() > 1e-12 * (1.0 + z.re.abs()) {
        return Err(Error::NotReal { imag: z.im });
    }
    Ok(z.re)
}

/// `σ₁ = [[0,1],[1,0]]`, `σ₂ = [[1,0],[0,0]]`, `γ = [[0,0],[0,i]]`.
pub fn sl_matrices() -> (CMatrix, CMatrix, CMatrix) {
    (
        real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        complex_matrix(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), I]),
    )
}

/// `σ₁ = I`, `σ₂ = diag(1, −1)/2`, `γ = 0`.
pub fn nls_matrices() -> (CMatrix, CMatrix, CMatrix) {
    (
        real_matrix(2, 2, &[1.0, 0.0, 0.0, 1.0]),
        real_matrix(2, 2, &[0.5, 0.0, 0.0, -0.5]),
        real_matrix(2, 2, &[0.0; 4]),
    )
}

/// Sturm–Liouville family driven by a real function β(t₂).
#[derive(Debug, Clone)]
pub struct SlModel {
    beta: Arc<dyn ScalarFn>,
}

impl SlModel {
    pub fn new(beta: Arc<dyn ScalarFn>) -> Self {
        Self { beta }
    }

    pub fn from_expression(src: &str) -> Result<Self> {
        Ok(Self::new(Arc::new(Expression::parse(src)?)))
    }

    /// β = −τ'/τ; the grid must avoid zeros of τ.
    pub fn from_tau(tau: Arc<dyn ScalarFn>) -> Self {
        Self::new(Arc::new(LogDerivative { tau }))
    }

    pub fn beta_fn(&self) -> &Arc<dyn ScalarFn> {
        &self.beta
    }

    pub fn beta(&self, t: f64) -> Result<f64> {
        real_value(self.beta.value(t)?)
    }

    pub fn dbeta(&self, t: f64) -> Result<f64> {
        real_value(self.beta.derivative(t)?)
    }

    /// π₁₁ = β' − β².
    pub fn pi11(&self, t: f64) -> Result<f64> {
        let b = self.beta(t)?;
        Ok(self.dbeta(t)? - b * b)
    }

    /// q = π₁₁ + β' + β² = 2β'.
    pub fn q(&self, t: f64) -> Result<f64> {
        let b = self.beta(t)?;
        Ok(self.pi11(t)? + self.dbeta(t)? + b * b)
    }

    /// `γ* = [[−iπ₁₁, −β], [β, i]]`.
    pub fn target_gamma_star(&self, t: f64) -> Result<CMatrix> {
        let (b, pi) = (self.beta(t)?, self.pi11(t)?);
        Ok(complex_matrix(2, 2, &[c(0.0, -pi), c(-b, 0.0), c(b, 0.0), I]))
    }

    pub fn vessel_params(&self, interval: (f64, f64)) -> Result<VesselParams> {
        sl_vessel_params(interval)
    }
}

/// The (constant) SL vessel parameters on an interval.
pub fn sl_vessel_params(interval: (f64, f64)) -> Result<VesselParams> {
    let (s1, s2, g) = sl_matrices();
    VesselParams::constant(interval, s1, s2, g)
}

/// The (constant) NLS vessel parameters on an interval.
pub fn nls_vessel_params(interval: (f64, f64)) -> Result<VesselParams> {
    let (s1, s2, g) = nls_matrices();
    VesselParams::constant(interval, s1, s2, g)
}

/// Largest deviation of γ* from the SL shape `[[·, −β], [β, i]]` with β real.
pub fn sl_structure_defect(gamma_star: &CMatrix) -> f64 {
    let g = gamma_star;
    let d22 = (g[(1, 1)] - I).norm();
    let anti = (g[(0, 1)] + g[(1, 0)]).norm();
    let real = g[(0, 1)].im.abs();
    let d11 = g[(0, 0)].re.abs();
    d22.max(anti).max(real).max(d11)
}

/// Largest deviation of γ* from the NLS shape `[[0, β], [−β̄, 0]]`.
pub fn nls_structure_defect(gamma_star: &CMatrix) -> f64 {
    let g = gamma_star;
    g[(0, 0)].norm().max(g[(1, 1)].norm()).max((g[(0, 1)] + g[(1, 0)].conj()).norm())
}

/// β = −H₀¹² and π₁₁ = β' − β² read off an SL trajectory at grid index k, with β' from the
/// vessel equations.
pub fn sl_beta_from_trajectory(traj: &VesselTrajectory, k: usize) -> Result<(f64, f64)> {
    let h0 = traj.realization_at(k)?.markov_moment(0);
    let dh0 = &moment_derivatives(traj, k, 0)?[0];
    let beta = real_value(-h0[(0, 1)])?;
    let dbeta = real_value(-dh0[(0, 1)])?;
    Ok((beta, dbeta))
}

/// q = 2β' of an SL trajectory at grid index k.
pub fn trajectory_potential(traj: &VesselTrajectory, k: usize) -> Result<f64> {
    Ok(2.0 * sl_beta_from_trajectory(traj, k)?.1)
}

/// Checks that `y₁` of `y = S(λ,t₂)u(λ,t₂)` solves `y₁'' = (q + iλ)y₁` on the trajectory grid,
/// where u solves the input LDE with `u(t_start) = u0`. Second derivatives by central
/// differences; the result is the max defect relative to max |y₁|.
pub fn sl_output_lde_check<Q>(traj: &VesselTrajectory, lambda: C64, u0: &CMatrix, q: Q) -> Result<f64>
where
    Q: Fn(f64) -> Result<f64>,
{
    if u0.shape() != (traj.p(), 1) {
        return Err(Error::DimensionMismatch("u0 must be a p×1 column".into()));
    }
    let grid = &traj.grid;
    if grid.steps < 2 {
        return Err(Error::InvalidArgument("output check needs at least two grid steps".into()));
    }
    let h = grid.h();
    let params = &traj.params;
    let gen = |t: f64, u: &CMatrix| params.input_generator(lambda, t) * u;
    let mut u = u0.clone();
    let mut y1 = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        if k > 0 {
            u = rk4_step(&gen, grid.t(k - 1), &u, h);
        }
        let y = traj.realization_at(k)?.eval_transfer(lambda)? * &u;
        y1.push(y[(0, 0)]);
    }
    let scale = y1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for k in 1..grid.steps {
        let d2 = (y1[k + 1] - y1[k] * 2.0 + y1[k - 1]) / (h * h);
        let defect = d2 - (c(q(grid.t(k))?, 0.0) + I * lambda) * y1[k];
        worst = worst.max(defect.norm());
    }
    Ok(worst / scale)
}

/// Non-linear Schrödinger family driven by a complex function β(t₂).
#[derive(Debug, Clone)]
pub struct NlsModel {
    beta: Arc<dyn ScalarFn>,
}

impl NlsModel {
    pub fn new(beta: Arc<dyn ScalarFn>) -> Self {
        Self { beta }
    }

    pub fn from_expression(src: &str) -> Result<Self> {
        Ok(Self::new(Arc::new(Expression::parse(src)?)))
    }

    pub fn beta_fn(&self) -> &Arc<dyn ScalarFn> {
        &self.beta
    }

    pub fn beta(&self, t: f64) -> Result<C64> {
        self.beta.value(t)
    }

    /// `γ* = [[0, β], [−β̄, 0]]`.
    pub fn target_gamma_star(&self, t: f64) -> Result<CMatrix> {
        let b = self.beta(t)?;
        Ok(complex_matrix(2, 2, &[c(0.0, 0.0), b, -b.conj(), c(0.0, 0.0)]))
    }

    pub fn vessel_params(&self, interval: (f64, f64)) -> Result<VesselParams> {
        nls_vessel_params(interval)
    }
}

/// max over the grid of ‖γ*_trajectory − γ*_target‖_F.
pub fn gamma_star_mismatch<F>(traj: &VesselTrajectory, target: F) -> Result<f64>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    let mut worst: f64 = 0.0;
    for k in 0..traj.grid.len() {
        worst = worst.max(fro(&(&traj.gamma_star[k] - target(traj.grid.t(k))?)));
    }
    Ok(worst)
}
