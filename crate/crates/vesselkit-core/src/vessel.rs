//! Vessel parameters and the t₂-evolution of realizations: trajectories of (B, 𝕏, γ*),
//! fundamental solutions of the input/output LDEs, residuals of the vessel identities,
//! the τ-function, the contour formula for B and the generalized Schur step.

use crate::error::{Error, Result};
use crate::matcore::{
    c, contour_integral, eye, fro, hermitian_defect, hermitian_eigenvalues, hermitian_part, inverse, least_squares,
    rk4_step, singular_values, solve, vectorize, unvectorize, kron, zeros, CMatrix, OdeGrid, C64,
};
use crate::realization::Realization;
use crate::schur::{schur_step_realization, SchurStepData};
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;

/// A matrix-valued function of t₂.
pub type MatFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

/// Ratio σ_min(𝕏)/σ_max(𝕏) below which a trajectory is truncated.
pub const SINGULARITY_CUTOFF: f64 = 1e-8;

const PARAM_SAMPLES: usize = 17;

/// Vessel parameters σ₁, σ₂, γ (and dσ₁/dt₂) on an interval.
#[derive(Clone)]
pub struct VesselParams {
    pub interval: (f64, f64),
    p: usize,
    sigma1: MatFn,
    sigma2: MatFn,
    gamma: MatFn,
    dsigma1: MatFn,
    constant: bool,
}

impl fmt::Debug for VesselParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VesselParams")
            .field("interval", &self.interval)
            .field("p", &self.p)
            .field("constant", &self.constant)
            .finish()
    }
}

fn constant_fn(m: CMatrix) -> MatFn {
    Arc::new(move |_| m.clone())
}

impl VesselParams {
    /// Constant parameters (dσ₁ = 0).
    pub fn constant(interval: (f64, f64), sigma1: CMatrix, sigma2: CMatrix, gamma: CMatrix) -> Result<Self> {
        let p = sigma1.nrows();
        let params = Self {
            interval,
            p,
            sigma1: constant_fn(sigma1),
            sigma2: constant_fn(sigma2),
            gamma: constant_fn(gamma),
            dsigma1: constant_fn(zeros(p, p)),
            constant: true,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters given by functions of t₂; dσ₁ must be the exact derivative of σ₁.
    pub fn from_fns(
        interval: (f64, f64),
        p: usize,
        sigma1: MatFn,
        sigma2: MatFn,
        gamma: MatFn,
        dsigma1: MatFn,
    ) -> Result<Self> {
        let params = Self { interval, p, sigma1, sigma2, gamma, dsigma1, constant: false };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = self.interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidArgument(format!("interval [{a}, {b}]")));
        }
        for k in 0..PARAM_SAMPLES {
            let t = a + (b - a) * k as f64 / (PARAM_SAMPLES - 1) as f64;
            let (s1, s2, g, ds1) = (self.sigma1(t), self.sigma2(t), self.gamma(t), self.dsigma1(t));
            for m in [&s1, &s2, &g, &ds1] {
                if m.shape() != (self.p, self.p) {
                    return Err(Error::DimensionMismatch("vessel parameter size".into()));
                }
                crate::matcore::ensure_finite(m, "vessel parameter")?;
            }
            for m in [&s1, &s2] {
                let defect = hermitian_defect(m);
                if defect > 1e-9 * fro(m).max(1.0) {
                    return Err(Error::NotHermitian { defect });
                }
            }
            inverse(&s1, "sigma1")?;
            let residual = fro(&(&g + g.adjoint() + &ds1));
            if residual > 1e-9 * (1.0 + fro(&g)) {
                return Err(Error::ConstraintViolated { residual });
            }
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.p
    }
    pub fn is_constant(&self) -> bool {
        self.constant
    }
    pub fn sigma1(&self, t: f64) -> CMatrix {
        (self.sigma1)(t)
    }
    pub fn sigma2(&self, t: f64) -> CMatrix {
        (self.sigma2)(t)
    }
    pub fn gamma(&self, t: f64) -> CMatrix {
        (self.gamma)(t)
    }
    pub fn dsigma1(&self, t: f64) -> CMatrix {
        (self.dsigma1)(t)
    }

    /// Doubled parameters `Σ₁ = diag(−σ₁, σ₁)`, `Σ₂ = diag(−σ₂, σ₂)`, `Γ = diag(−γ*, γ)` for a
    /// given output coupling γ*. Their input LDE is the pair (output LDE, input LDE), so a
    /// row `[I S]` intertwines with it.
    pub fn doubled(&self, gamma_star: MatFn) -> Result<Self> {
        let p = self.p;
        let blockdiag = move |a: CMatrix, b: CMatrix| {
            let mut m = zeros(2 * p, 2 * p);
            m.view_mut((0, 0), (p, p)).copy_from(&a);
            m.view_mut((p, p), (p, p)).copy_from(&b);
            m
        };
        let (s1, s2, g, ds1) = (self.sigma1.clone(), self.sigma2.clone(), self.gamma.clone(), self.dsigma1.clone());
        let out = Self {
            interval: self.interval,
            p: 2 * p,
            sigma1: Arc::new(move |t| blockdiag(-s1(t), s1(t))),
            sigma2: Arc::new(move |t| blockdiag(-s2(t), s2(t))),
            gamma: Arc::new(move |t| blockdiag(-gamma_star(t), g(t))),
            dsigma1: Arc::new(move |t| blockdiag(-ds1(t), ds1(t))),
            constant: false,
        };
        out.validate()?;
        Ok(out)
    }

    /// Input LDE generator `σ₁⁻¹(σ₂λ + γ)` at t₂.
    pub fn input_generator(&self, lambda: C64, t: f64) -> CMatrix {
        let s1 = self.sigma1(t);
        let m = self.sigma2(t) * lambda + self.gamma(t);
        solve(&s1, &m, "sigma1").expect("sigma1 validated invertible")
    }

    /// Right side of the vessel equations: `B' = (−A₁Bσ₂ − Bγ − B·dσ₁)σ₁⁻¹`, `𝕏' = Bσ₂B*`.
    pub fn vessel_rhs(&self, a1: &CMatrix, b: &CMatrix, t: f64) -> (CMatrix, CMatrix) {
        let s1 = self.sigma1(t);
        let s2 = self.sigma2(t);
        let num = -(a1 * b * &s2) - b * self.gamma(t) - b * self.dsigma1(t);
        let s1inv = inverse(&s1, "sigma1").expect("sigma1 validated invertible");
        (num * s1inv, b * &s2 * b.adjoint())
    }

    /// Linkage `γ* = γ + σ₂B*𝕏⁻¹Bσ₁ − σ₁B*𝕏⁻¹Bσ₂`.
    pub fn link(&self, b: &CMatrix, x: &CMatrix, t: f64) -> Result<CMatrix> {
        let g = self.gamma(t);
        if b.nrows() == 0 {
            return Ok(g);
        }
        let m = b.adjoint() * solve(x, b, "X")?;
        let (s1, s2) = (self.sigma1(t), self.sigma2(t));
        Ok(g + &s2 * &m * &s1 - &s1 * &m * &s2)
    }
}

/// Samples of (B, 𝕏, γ*) on a uniform t₂-grid for a fixed A₁.
#[derive(Debug, Clone)]
pub struct VesselTrajectory {
    pub params: VesselParams,
    pub a1: CMatrix,
    pub t2_0: f64,
    pub grid: OdeGrid,
    pub b: Vec<CMatrix>,
    pub x: Vec<CMatrix>,
    pub gamma_star: Vec<CMatrix>,
    /// Set when the integration stopped early because 𝕏 became nearly singular.
    pub truncated: bool,
}

fn conditioning(x: &CMatrix) -> f64 {
    if x.nrows() == 0 {
        return 1.0;
    }
    let s = singular_values(x);
    if s[0] == 0.0 {
        0.0
    } else {
        s[s.len() - 1] / s[0]
    }
}

fn inertia(x: &CMatrix) -> usize {
    hermitian_eigenvalues(x).iter().filter(|e| **e < 0.0).count()
}

/// Integrates the vessel equations from the realization `r0` at `t2_0` (a grid point) over the
/// whole grid, in both directions, and evaluates γ* by the linkage condition.
pub fn evolve_vessel(r0: &Realization, params: &VesselParams, t2_0: f64, grid: &OdeGrid) -> Result<VesselTrajectory> {
    let p = params.p();
    if r0.p() != p {
        return Err(Error::DimensionMismatch(format!("realization p = {} vs params p = {p}", r0.p())));
    }
    let defect = fro(&(params.sigma1(t2_0) - r0.sigma1()));
    if defect > 1e-10 * (1.0 + fro(r0.sigma1())) {
        return Err(Error::SigmaMismatch { defect });
    }
    let k0 = grid.index_of(t2_0)?;
    let t0 = grid.t(k0);
    let n = r0.dim();
    if conditioning(r0.x()) < SINGULARITY_CUTOFF {
        return Err(Error::GridExhausted);
    }
    let a1 = r0.a1().clone();
    let rhs = |t: f64, y: &CMatrix| -> CMatrix {
        let b = y.columns(0, p).into_owned();
        let (db, dx) = params.vessel_rhs(&a1, &b, t);
        let mut out = zeros(n, p + n);
        out.columns_mut(0, p).copy_from(&db);
        out.columns_mut(p, n).copy_from(&dx);
        out
    };
    let pack = |b: &CMatrix, x: &CMatrix| {
        let mut y = zeros(n, p + n);
        y.columns_mut(0, p).copy_from(b);
        y.columns_mut(p, n).copy_from(x);
        y
    };
    let h = grid.h();
    let mut truncated = false;
    let mut march = |dir: f64, count: usize| -> Result<Vec<(CMatrix, CMatrix)>> {
        let mut out = Vec::new();
        let mut y = pack(r0.b(), r0.x());
        let mut t = t0;
        for _ in 0..count {
            let mut next = rk4_step(&rhs, t, &y, dir * h);
            t += dir * h;
            if !crate::matcore::is_finite(&next) {
                return Err(Error::NonFinite("vessel state"));
            }
            let xs = hermitian_part(&next.columns(p, n).into_owned());
            next.columns_mut(p, n).copy_from(&xs);
            // A change of inertia means 𝕏 went singular inside the step.
            if conditioning(&xs) < SINGULARITY_CUTOFF || inertia(&xs) != inertia(&y.columns(p, n).into_owned()) {
                truncated = true;
                break;
            }
            out.push((next.columns(0, p).into_owned(), xs));
            y = next;
        }
        Ok(out)
    };
    let forward = march(1.0, grid.steps - k0)?;
    let backward = march(-1.0, k0)?;
    let k_lo = k0 - backward.len();
    let k_hi = k0 + forward.len();
    if k_lo == k_hi {
        return Err(Error::GridExhausted);
    }
    let sub = grid.slice(k_lo, k_hi)?;
    let mut b = Vec::with_capacity(sub.len());
    let mut x = Vec::with_capacity(sub.len());
    for (bb, xx) in backward.into_iter().rev() {
        b.push(bb);
        x.push(xx);
    }
    b.push(r0.b().clone());
    x.push(r0.x().clone());
    for (bb, xx) in forward {
        b.push(bb);
        x.push(xx);
    }
    let gamma_star = (0..sub.len())
        .map(|k| params.link(&b[k], &x[k], sub.t(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(VesselTrajectory {
        params: params.clone(),
        a1: r0.a1().clone(),
        t2_0: t0,
        grid: sub,
        b,
        x,
        gamma_star,
        truncated,
    })
}

impl VesselTrajectory {
    pub fn p(&self) -> usize {
        self.params.p()
    }

    pub fn dim(&self) -> usize {
        self.a1.nrows()
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.grid.index_of(t)
    }

    /// Snapshot realization at grid index k.
    pub fn realization_at(&self, k: usize) -> Result<Realization> {
        Realization::new(
            self.a1.clone(),
            self.b[k].clone(),
            self.x[k].clone(),
            self.params.sigma1(self.grid.t(k)),
        )
    }

    /// Snapshot realization at the grid point t₂.
    pub fn snapshot(&self, t2: f64) -> Result<Realization> {
        self.realization_at(self.index_of(t2)?)
    }

    /// `(B', 𝕏')` at grid index k, from the vessel equations.
    pub fn derivatives_at(&self, k: usize) -> (CMatrix, CMatrix) {
        self.params.vessel_rhs(&self.a1, &self.b[k], self.grid.t(k))
    }

    /// (B, 𝕏) at any t inside the grid by cubic Hermite interpolation with the exact derivatives.
    pub fn state_at(&self, t: f64) -> Result<(CMatrix, CMatrix)> {
        let h = self.grid.h();
        let s = (t - self.grid.t_start) / h;
        if s < -1e-9 || s > self.grid.steps as f64 + 1e-9 {
            return Err(Error::OffGrid { t, nearest: t.clamp(self.grid.t_start, self.grid.t_end) });
        }
        let k = (s.floor().max(0.0) as usize).min(self.grid.steps - 1);
        let u = (s - k as f64).clamp(0.0, 1.0);
        if u == 0.0 {
            return Ok((self.b[k].clone(), self.x[k].clone()));
        }
        let (db0, dx0) = self.derivatives_at(k);
        let (db1, dx1) = self.derivatives_at(k + 1);
        let h00 = 2.0 * u.powi(3) - 3.0 * u * u + 1.0;
        let h10 = u.powi(3) - 2.0 * u * u + u;
        let h01 = -2.0 * u.powi(3) + 3.0 * u * u;
        let h11 = u.powi(3) - u * u;
        let herm = |y0: &CMatrix, d0: &CMatrix, y1: &CMatrix, d1: &CMatrix| {
            y0.scale(h00) + d0.scale(h10 * h) + y1.scale(h01) + d1.scale(h11 * h)
        };
        let b = herm(&self.b[k], &db0, &self.b[k + 1], &db1);
        let x = hermitian_part(&herm(&self.x[k], &dx0, &self.x[k + 1], &dx1));
        Ok((b, x))
    }

    /// γ*(t) at any t inside the grid (exact at grid points, interpolated state in between).
    pub fn gamma_star_at(&self, t: f64) -> Result<CMatrix> {
        if let Ok(k) = self.index_of(t) {
            if (self.grid.t(k) - t).abs() <= 1e-12 * (1.0 + t.abs()) {
                return Ok(self.gamma_star[k].clone());
            }
        }
        let (b, x) = self.state_at(t)?;
        self.params.link(&b, &x, t)
    }

    /// CSV export: one row per grid point, column `t2` followed by the row-major entries of B,
    /// 𝕏 and γ*, each as a `_re`/`_im` column pair.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let (n, p) = (self.dim(), self.p());
        let mut out = String::from("t2");
        for (name, rows, cols) in [("b", n, p), ("x", n, n), ("gstar", p, p)] {
            for r in 0..rows {
                for col in 0..cols {
                    let _ = write!(out, ",{name}_{r}_{col}_re,{name}_{r}_{col}_im");
                }
            }
        }
        out.push('\n');
        for k in 0..self.grid.len() {
            let _ = write!(out, "{:?}", self.grid.t(k));
            for m in [&self.b[k], &self.x[k], &self.gamma_star[k]] {
                for r in 0..m.nrows() {
                    for col in 0..m.ncols() {
                        let _ = write!(out, ",{:?},{:?}", m[(r, col)].re, m[(r, col)].im);
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// S(λ, t₂) at a grid point.
    pub fn eval_s(&self, lambda: C64, t2: f64) -> Result<CMatrix> {
        self.snapshot(t2)?.eval_transfer(lambda)
    }

    /// Input fundamental solution Φ(λ, t_to, t_from) on the trajectory grid.
    pub fn phi(&self, lambda: C64, t_from: f64, t_to: f64) -> Result<CMatrix> {
        let k0 = self.index_of(t_from)?;
        let k1 = self.index_of(t_to)?;
        let (a, b) = (self.grid.t(k0), self.grid.t(k1));
        let steps = k0.abs_diff(k1);
        let params = &self.params;
        crate::matcore::ode_transport(
            |t, u| params.input_generator(lambda, t) * u,
            &eye(self.p()),
            a,
            b,
            steps,
        )
    }

    /// Output fundamental solution Φ*(λ, t_to, t_from) (generator `σ₁⁻¹(σ₂λ + γ*)`).
    pub fn phi_star(&self, lambda: C64, t_from: f64, t_to: f64) -> Result<CMatrix> {
        let k0 = self.index_of(t_from)?;
        let k1 = self.index_of(t_to)?;
        let (a, b) = (self.grid.t(k0), self.grid.t(k1));
        let steps = k0.abs_diff(k1);
        let mut y = eye(self.p());
        if steps == 0 {
            return Ok(y);
        }
        let h = (b - a) / steps as f64;
        let gen = |t: f64| -> Result<CMatrix> {
            let m = self.params.sigma2(t) * lambda + self.gamma_star_at(t)?;
            solve(&self.params.sigma1(t), &m, "sigma1")
        };
        for k in 0..steps {
            let t = a + k as f64 * h;
            let g0 = gen(t)?;
            let gm = gen(t + 0.5 * h)?;
            let g1 = gen(t + h)?;
            let f = |tt: f64, yy: &CMatrix| -> CMatrix {
                let g = if tt == t { &g0 } else if tt == t + h { &g1 } else { &gm };
                g * yy
            };
            y = rk4_step(&f, t, &y, h);
            crate::matcore::ensure_finite(&y, "output fundamental solution")?;
        }
        Ok(y)
    }
}

/// Which linear differential equation a fundamental solution belongs to.
#[derive(Debug, Clone, Copy)]
pub enum Lde<'a> {
    /// `u' = σ₁⁻¹(σ₂λ + γ)u`, integrated with the given number of RK4 steps.
    Input { params: &'a VesselParams, steps: usize },
    /// `y' = σ₁⁻¹(σ₂λ + γ*)y` with γ* taken from the trajectory (grid points only).
    Output(&'a VesselTrajectory),
}

/// Φ(λ, t_to, t_from) with Φ(λ, t, t) = I.
pub fn fundamental_solution(lde: Lde<'_>, lambda: C64, t_from: f64, t_to: f64) -> Result<CMatrix> {
    match lde {
        Lde::Input { params, steps } => crate::matcore::ode_transport(
            |t, u| params.input_generator(lambda, t) * u,
            &eye(params.p()),
            t_from,
            t_to,
            if t_from == t_to { 0 } else { steps.max(1) },
        ),
        Lde::Output(traj) => traj.phi_star(lambda, t_from, t_to),
    }
}

fn sample_max<F>(lambdas: &[C64], t2s: &[f64], f: F) -> Result<f64>
where
    F: Fn(C64, f64) -> Result<f64> + Sync,
{
    let pairs: Vec<(C64, f64)> = lambdas.iter().flat_map(|&l| t2s.iter().map(move |&t| (l, t))).collect();
    let vals: Vec<Result<f64>> = pairs.par_iter().map(|&(l, t)| f(l, t)).collect();
    let mut m: f64 = 0.0;
    for v in vals {
        m = m.max(v?);
    }
    Ok(m)
}

/// max ‖S(λ,t₂)Φ(λ,t₂,t₂⁰) − Φ*(λ,t₂,t₂⁰)S(λ,t₂⁰)‖_F / ‖Φ‖_F over the samples.
pub fn intertwining_residual(traj: &VesselTrajectory, lambdas: &[C64], t2s: &[f64]) -> Result<f64> {
    let t0 = traj.t2_0;
    let s0s = lambdas.iter().map(|&l| traj.eval_s(l, t0)).collect::<Result<Vec<_>>>()?;
    let s0_of = |l: C64| s0s[lambdas.iter().position(|&x| x == l).expect("sample")].clone();
    sample_max(lambdas, t2s, |l, t| {
        let phi = traj.phi(l, t0, t)?;
        let phis = traj.phi_star(l, t0, t)?;
        let s = traj.eval_s(l, t)?;
        Ok(fro(&(s * &phi - phis * s0_of(l))) / fro(&phi))
    })
}

/// `∂S/∂t₂` at a grid point, from the exact derivatives of B and 𝕏.
pub fn ds_dt(traj: &VesselTrajectory, lambda: C64, t2: f64) -> Result<CMatrix> {
    let k = traj.index_of(t2)?;
    let t = traj.grid.t(k);
    let p = traj.p();
    if traj.dim() == 0 {
        return Ok(zeros(p, p));
    }
    let r = traj.realization_at(k)?;
    let (db, dx) = traj.derivatives_at(k);
    let n = traj.dim();
    let res = eye(n) * lambda - &traj.a1;
    let rb = solve(&res, &traj.b[k], "resolvent").map_err(|_| Error::PoleAt(lambda))?;
    let rdb = solve(&res, &db, "resolvent").map_err(|_| Error::PoleAt(lambda))?;
    let xi = r.x_inv();
    let s1 = traj.params.sigma1(t);
    let ds1 = traj.params.dsigma1(t);
    let b = &traj.b[k];
    Ok(-(db.adjoint() * xi * &rb * &s1) + b.adjoint() * xi * &dx * xi * &rb * &s1
        - b.adjoint() * xi * &rdb * &s1
        - b.adjoint() * xi * &rb * &ds1)
}

/// Residual of `∂S/∂t₂ = σ₁⁻¹(σ₂λ + γ*)S − Sσ₁⁻¹(σ₂λ + γ)` at a grid point.
pub fn ds_residual(traj: &VesselTrajectory, lambda: C64, t2: f64) -> Result<f64> {
    let k = traj.index_of(t2)?;
    let t = traj.grid.t(k);
    let s = traj.eval_s(lambda, t)?;
    let lhs = ds_dt(traj, lambda, t)?;
    let s1 = traj.params.sigma1(t);
    let s2 = traj.params.sigma2(t);
    let out = solve(&s1, &(&s2 * lambda + &traj.gamma_star[k]), "sigma1")?;
    let inp = solve(&s1, &(&s2 * lambda + traj.params.gamma(t)), "sigma1")?;
    Ok(fro(&(lhs - (out * &s - &s * inp))))
}

/// max ‖S(λ,t₂) − σ₁⁻¹S(−λ̄,t₂)^{−*}σ₁‖_F over the samples.
pub fn symmetry_residual(traj: &VesselTrajectory, lambdas: &[C64], t2s: &[f64]) -> Result<f64> {
    sample_max(lambdas, t2s, |l, t| {
        let k = traj.index_of(t)?;
        let r = traj.realization_at(k)?;
        symmetry_defect(&r, l)
    })
}

/// ‖S(λ) − σ₁⁻¹S(−λ̄)^{−*}σ₁‖_F for one realization.
pub fn symmetry_defect(r: &Realization, lambda: C64) -> Result<f64> {
    let s = r.eval_transfer(lambda)?;
    let mirror = r.eval_transfer(-lambda.conj())?;
    let inv = inverse(&mirror, "S(-conj(lambda))").map_err(|_| Error::SingularValue(-lambda.conj()))?;
    let s1 = r.sigma1();
    let rhs = solve(s1, &(inv.adjoint() * s1), "sigma1")?;
    Ok(fro(&(s - rhs)))
}

/// τ(t₂) = det 𝕏(t₂).
pub fn tau_function(traj: &VesselTrajectory, t2: f64) -> Result<f64> {
    let k = traj.index_of(t2)?;
    let d = if traj.dim() == 0 { c(1.0, 0.0) } else { traj.x[k].determinant() };
    Ok(d.re)
}

/// Circle used by [`b_via_contour`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub center: C64,
    pub radius: f64,
    pub nodes: usize,
}

impl ContourSpec {
    /// Circle around the centroid of spec(A₁) with unit margin.
    pub fn enclosing(a1: &CMatrix, nodes: usize) -> Self {
        let eig = crate::matcore::eigenvalues(a1);
        let center = if eig.is_empty() {
            c(0.0, 0.0)
        } else {
            eig.iter().sum::<C64>() / c(eig.len() as f64, 0.0)
        };
        let radius = eig.iter().map(|e| (e - center).norm()).fold(0.0, f64::max) + 1.0;
        Self { center, radius, nodes }
    }
}

/// B(t₂) from the contour formula `B(t)σ₁(t) = (1/2πi)∮(λ − A₁)⁻¹B₀σ₁(t₀)Φ⁻¹(λ,t,t₀)dλ`,
/// with Φ integrated in `steps` RK4 steps per node.
pub fn b_via_contour(
    r0: &Realization,
    params: &VesselParams,
    t2_0: f64,
    t2: f64,
    quad: ContourSpec,
    steps: usize,
) -> Result<CMatrix> {
    let s10 = r0.sigma1().clone();
    let integrand = |nodes: usize| {
        contour_integral(
            |l| {
                let phi = fundamental_solution(Lde::Input { params, steps }, l, t2_0, t2)?;
                let phinv = inverse(&phi, "Phi")?;
                Ok(r0.resolvent_b(l)? * &s10 * phinv)
            },
            quad.center,
            quad.radius,
            nodes,
        )
    };
    let full = integrand(quad.nodes)?;
    let half = integrand((quad.nodes / 2).max(16))?;
    if fro(&(&full - &half)) > 1e-6 * (1.0 + fro(&full)) {
        return Err(Error::QuadratureDiverged);
    }
    let s1 = params.sigma1(t2);
    Ok(full * inverse(&s1, "sigma1")?)
}

/// Generalized Schur step: the classical step applied to the snapshot at t₂⁰, re-evolved
/// with the same parameters over the same grid.
pub fn generalized_schur_step(traj: &VesselTrajectory, step: &SchurStepData, t2_0: f64) -> Result<VesselTrajectory> {
    let snap = traj.snapshot(t2_0)?;
    let r = schur_step_realization(&snap, step)?;
    evolve_vessel(&r, &traj.params, traj.grid.t(traj.index_of(t2_0)?), &traj.grid)
}

/// Result of [`similarity_between`].
#[derive(Debug, Clone)]
pub struct Similarity {
    pub v: CMatrix,
    /// Least-squares residual of `A₂V − VA₁ = 0`, `VB₁ = B₂`.
    pub residual: f64,
    /// ‖𝕏₂ − V𝕏₁V*‖_F.
    pub x_residual: f64,
}

/// Least-squares V for `A₂V = VA₁`, `VB₁ = B₂`, with the relative residual and
/// ‖𝕏₂ − V𝕏₁V*‖_F / (1 + ‖𝕏₂‖_F); no thresholds applied.
pub fn similarity_fit(r1: &Realization, r2: &Realization) -> Result<Similarity> {
    let n = r1.dim();
    if r2.dim() != n || r1.p() != r2.p() {
        return Err(Error::DimensionMismatch("similarity between realizations of different size".into()));
    }
    if n == 0 {
        return Ok(Similarity { v: zeros(0, 0), residual: 0.0, x_residual: 0.0 });
    }
    let p = r1.p();
    let comm = kron(&eye(n), r2.a1()) - kron(&r1.a1().transpose(), &eye(n));
    let inp = kron(&r1.b().transpose(), &eye(n));
    let mut k = zeros(n * n + n * p, n * n);
    k.view_mut((0, 0), (n * n, n * n)).copy_from(&comm);
    k.view_mut((n * n, 0), (n * p, n * n)).copy_from(&inp);
    let mut rhs = zeros(n * n + n * p, 1);
    rhs.view_mut((n * n, 0), (n * p, 1)).copy_from(&vectorize(r2.b()));
    let ls = least_squares(&k, &rhs, 1e-12);
    let v = unvectorize(&ls.x, n, n);
    if conditioning(&v) < 1e-12 {
        return Err(Error::NotSimilar { residual: f64::INFINITY });
    }
    let scale = 1.0 + fro(r2.b()) + fro(r2.a1()) * fro(&v);
    let residual = ls.residual / scale;
    let x_residual = fro(&(r2.x() - &v * r1.x() * v.adjoint())) / (1.0 + fro(r2.x()));
    Ok(Similarity { v, residual, x_residual })
}

/// Finds V with `A₂V = VA₁`, `VB₁ = B₂` and checks `𝕏₂ = V𝕏₁V*`, both to 1e−8.
pub fn similarity_between(r1: &Realization, r2: &Realization) -> Result<Similarity> {
    let sim = similarity_fit(r1, r2)?;
    if sim.residual > 1e-8 {
        return Err(Error::NotSimilar { residual: sim.residual });
    }
    if sim.x_residual > 1e-8 {
        return Err(Error::NotSimilar { residual: sim.x_residual });
    }
    Ok(sim)
}

/// max |det Φ* − det Φ| / |det Φ| over the samples.
pub fn detphi_residual(traj: &VesselTrajectory, lambdas: &[C64], t2s: &[f64]) -> Result<f64> {
    let t0 = traj.t2_0;
    sample_max(lambdas, t2s, |l, t| {
        let d = traj.phi(l, t0, t)?.determinant();
        let ds = traj.phi_star(l, t0, t)?.determinant();
        Ok((ds - d).norm() / d.norm())
    })
}
