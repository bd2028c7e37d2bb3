//! Dense complex linear algebra, Sylvester solves, positivity tests, a fixed-step
//! RK4 integrator and circle quadrature.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;

pub use num_complex::Complex64 as C64;

/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn eye(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Matrix with real entries given in row-major order.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols, "entry count");
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| c(x, 0.0)))
}

/// Matrix with complex entries given in row-major order.
pub fn complex_matrix(rows: usize, cols: usize, entries: &[C64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols, "entry count");
    CMatrix::from_row_slice(rows, cols, entries)
}

pub fn row(entries: &[C64]) -> CMatrix {
    CMatrix::from_row_slice(1, entries.len(), entries)
}

pub fn scalar(z: C64) -> CMatrix {
    CMatrix::from_element(1, 1, z)
}

pub fn fro(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(m: &CMatrix, what: &'static str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// ‖M − M*‖_F.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    fro(&(m - m.adjoint()))
}

pub fn inverse(m: &CMatrix, what: &'static str) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{what}: not square")));
    }
    if m.nrows() == 0 {
        return Ok(zeros(0, 0));
    }
    let inv = m.clone().try_inverse().ok_or(Error::NotInvertible(what))?;
    if !is_finite(&inv) {
        return Err(Error::NotInvertible(what));
    }
    Ok(inv)
}

/// Solves `M X = R` by LU.
pub fn solve(m: &CMatrix, r: &CMatrix, what: &'static str) -> Result<CMatrix> {
    if m.nrows() == 0 {
        return Ok(zeros(0, r.ncols()));
    }
    let x = m.clone().lu().solve(r).ok_or(Error::NotInvertible(what))?;
    if !is_finite(&x) {
        return Err(Error::NotInvertible(what));
    }
    Ok(x)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Eigenvalues of a general complex square matrix (complex Schur form).
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let t = m.clone().schur().unpack().1;
    (0..m.nrows()).map(|k| t[(k, k)]).collect()
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut e: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vectorize(m: &CMatrix) -> CMatrix {
    CMatrix::from_column_slice(m.len(), 1, m.as_slice())
}

pub fn unvectorize(v: &CMatrix, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Absolute/relative tolerance pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Result<Self> {
        if !(abs >= 0.0 && rel >= 0.0) || (abs == 0.0 && rel == 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance ({abs}, {rel})")));
        }
        Ok(Self { abs, rel })
    }

    pub fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    /// `abs + rel·scale`.
    pub fn bound(&self, scale: f64) -> f64 {
        self.abs + self.rel * scale
    }
}

/// Uniform grid `t_start + k·h`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl OdeGrid {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) || steps == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid [{t_start}, {t_end}] with {steps} steps"
            )));
        }
        Ok(Self { t_start, t_end, steps })
    }

    pub fn h(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.h()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.t(k)).collect()
    }

    /// Index of the grid point nearest to `t`; fails when farther than h/2.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let h = self.h();
        let k = ((t - self.t_start) / h).round();
        let k = k.clamp(0.0, self.steps as f64) as usize;
        let nearest = self.t(k);
        if (t - nearest).abs() > 0.5 * h * (1.0 + 1e-9) {
            return Err(Error::OffGrid { t, nearest });
        }
        Ok(k)
    }

    /// Sub-grid between indices `k0 <= k1` (same step size).
    pub fn slice(&self, k0: usize, k1: usize) -> Result<Self> {
        Self::new(self.t(k0), self.t(k1), k1 - k0)
    }
}

/// Minimum-norm least-squares solution of `K x = r` with rank and nullspace information.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub x: CMatrix,
    pub rank: usize,
    /// Orthonormal basis of ker K (columns).
    pub nullspace: Vec<CMatrix>,
    /// ‖K x − r‖₂.
    pub residual: f64,
    pub sigma_max: f64,
}

/// SVD-based minimum-norm least squares; singular values below `rank_tol·σ_max` count as zero.
pub fn least_squares(k: &CMatrix, r: &CMatrix, rank_tol: f64) -> LeastSquares {
    let cols = k.ncols();
    if k.is_empty() {
        return LeastSquares {
            x: zeros(cols, r.ncols()),
            rank: 0,
            nullspace: (0..cols).map(|j| eye(cols).columns(j, 1).into_owned()).collect(),
            residual: fro(r),
            sigma_max: 0.0,
        };
    }
    // Pad short systems so that V is square and the nullspace is complete.
    let kk = if k.nrows() < cols {
        let mut p = zeros(cols, cols);
        p.view_mut((0, 0), (k.nrows(), cols)).copy_from(k);
        p
    } else {
        k.clone()
    };
    let mut rr = zeros(kk.nrows(), r.ncols());
    rr.view_mut((0, 0), (r.nrows(), r.ncols())).copy_from(r);
    let svd = kk.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;
    let sigma_max = s.iter().cloned().fold(0.0, f64::max);
    let cut = rank_tol * sigma_max;
    let mut x = zeros(cols, r.ncols());
    let mut rank = 0;
    let mut nullspace = Vec::new();
    for (i, &si) in s.iter().enumerate() {
        let v = vt.rows(i, 1).adjoint();
        if si > cut && si > 0.0 {
            rank += 1;
            let coef = u.column(i).adjoint() * &rr / c(si, 0.0);
            x += &v * coef;
        } else {
            nullspace.push(v);
        }
    }
    let residual = fro(&(k * &x - r));
    LeastSquares { x, rank, nullspace, residual, sigma_max }
}

/// Full result of a Sylvester solve `AX + XB = C`.
#[derive(Debug, Clone)]
pub struct SylvesterSolution {
    pub x: CMatrix,
    pub nullity: usize,
    /// Basis of the kernel of `X ↦ AX + XB`, reshaped to n×m matrices.
    pub nullspace: Vec<CMatrix>,
    pub range_residual: f64,
}

const RANK_TOL: f64 = 1e-9;

fn sylvester_operator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let m = b.nrows();
    kron(&eye(m), a) + kron(&b.transpose(), &eye(n))
}

/// Solves `AX + XB = C` by Kronecker vectorization, exposing the kernel when the operator is singular.
pub fn sylvester_full(a: &CMatrix, b: &CMatrix, cm: &CMatrix) -> Result<SylvesterSolution> {
    let (n, m) = (a.nrows(), b.nrows());
    if a.ncols() != n || b.ncols() != m || cm.nrows() != n || cm.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "sylvester: A {}x{}, B {}x{}, C {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            cm.nrows(),
            cm.ncols()
        )));
    }
    for (mat, what) in [(a, "sylvester A"), (b, "sylvester B"), (cm, "sylvester C")] {
        ensure_finite(mat, what)?;
    }
    if n == 0 || m == 0 {
        return Ok(SylvesterSolution {
            x: zeros(n, m),
            nullity: 0,
            nullspace: Vec::new(),
            range_residual: 0.0,
        });
    }
    let k = sylvester_operator(a, b);
    let ls = least_squares(&k, &vectorize(cm), RANK_TOL);
    let x = unvectorize(&ls.x, n, m);
    let scale = fro(cm).max(ls.sigma_max * fro(&x));
    if ls.residual > RANK_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularOperator { residual: ls.residual });
    }
    Ok(SylvesterSolution {
        x,
        nullity: ls.nullspace.len(),
        nullspace: ls.nullspace.iter().map(|v| unvectorize(v, n, m)).collect(),
        range_residual: ls.residual,
    })
}

/// Solves `AX + XB = C`; the minimum-norm solution is returned when the operator is singular
/// but `C` lies in its range.
pub fn solve_sylvester(a: &CMatrix, b: &CMatrix, cm: &CMatrix) -> Result<CMatrix> {
    sylvester_full(a, b, cm).map(|s| s.x)
}

/// Positive definiteness of a Hermitian matrix; returns the verdict and λ_min.
pub fn is_positive_definite(m: &CMatrix, tol: Tolerance) -> Result<(bool, f64)> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("positivity test on non-square matrix".into()));
    }
    ensure_finite(m, "positivity test")?;
    let defect = hermitian_defect(m);
    if defect > tol.abs * fro(m) {
        return Err(Error::NotHermitian { defect });
    }
    let lmin = hermitian_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY);
    Ok((lmin > tol.abs, lmin))
}

/// One classical RK4 step of `y' = f(t, y)`.
pub fn rk4_step<F>(f: &F, t: f64, y: &CMatrix, h: f64) -> CMatrix
where
    F: Fn(f64, &CMatrix) -> CMatrix,
{
    let hc = c(h, 0.0);
    let half = c(0.5 * h, 0.0);
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y + &k1 * half));
    let k3 = f(t + 0.5 * h, &(y + &k2 * half));
    let k4 = f(t + h, &(y + &k3 * hc));
    y + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4) * (hc / 6.0)
}

/// Integrates `y' = rhs(t, y)` with fixed-step RK4; returns the state at every grid point.
pub fn ode_integrate<F>(rhs: F, y0: &CMatrix, grid: &OdeGrid) -> Result<Vec<CMatrix>>
where
    F: Fn(f64, &CMatrix) -> CMatrix,
{
    ensure_finite(y0, "ode initial state")?;
    let h = grid.h();
    let mut out = Vec::with_capacity(grid.len());
    out.push(y0.clone());
    for k in 0..grid.steps {
        let next = rk4_step(&rhs, grid.t(k), &out[k], h);
        ensure_finite(&next, "ode state")?;
        out.push(next);
    }
    Ok(out)
}

/// Integrates from `t0` to `t1` (either direction) in `steps` equal RK4 steps; returns the end state.
pub fn ode_transport<F>(rhs: F, y0: &CMatrix, t0: f64, t1: f64, steps: usize) -> Result<CMatrix>
where
    F: Fn(f64, &CMatrix) -> CMatrix,
{
    let mut y = y0.clone();
    if steps == 0 || t0 == t1 {
        return Ok(y);
    }
    let h = (t1 - t0) / steps as f64;
    for k in 0..steps {
        y = rk4_step(&rhs, t0 + k as f64 * h, &y, h);
        ensure_finite(&y, "ode state")?;
    }
    Ok(y)
}

/// `(1/2πi) ∮ f(λ) dλ` over the counter-clockwise circle by the trapezoid rule.
pub fn contour_integral<F>(f: F, center: C64, radius: f64, nodes: usize) -> Result<CMatrix>
where
    F: Fn(C64) -> Result<CMatrix> + Sync,
{
    if nodes < 16 || !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "contour with radius {radius} and {nodes} nodes"
        )));
    }
    let samples: Vec<Result<CMatrix>> = (0..nodes)
        .into_par_iter()
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / nodes as f64;
            let e = C64::from_polar(radius, theta);
            let v = f(center + e)?;
            if !is_finite(&v) {
                return Err(Error::NonFinite("contour sample"));
            }
            Ok(v * e)
        })
        .collect();
    let mut acc: Option<CMatrix> = None;
    for s in samples {
        let s = s?;
        acc = Some(match acc {
            None => s,
            Some(a) => a + s,
        });
    }
    let acc = acc.expect("at least 16 nodes");
    Ok(acc / c(nodes as f64, 0.0))
}
