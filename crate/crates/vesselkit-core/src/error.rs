use crate::matcore::C64;
use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular operator: right-hand side not in range (residual {residual:e})")]
    SingularOperator { residual: f64 },
    #[error("matrix is not invertible: {0}")]
    NotInvertible(&'static str),
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("lambda = {0} is a pole of the transfer function")]
    PoleAt(C64),
    #[error("kernel quotient undefined: lambda = -conj(w)")]
    DegenerateDenominator,
    #[error("expected a real value, imaginary part {imag:e}")]
    NotReal { imag: f64 },
    #[error("inadmissible direction at step {index:?}: xtilde = {xtilde:e}")]
    InadmissibleDirection { index: Option<usize>, xtilde: f64 },
    #[error("Gram matrix not positive (lambda_min = {lambda_min:e})")]
    GramNotPositive { lambda_min: f64 },
    #[error("duplicate interpolation node at index {0}")]
    DuplicateNode(usize),
    #[error("linear fractional transformation is singular at lambda = {0}")]
    SingularDenominator(C64),
    #[error("no admissible direction found on the search grid")]
    NotFound,
    #[error("sigma1(t2_0) does not match the realization (defect {defect:e})")]
    SigmaMismatch { defect: f64 },
    #[error("X is singular at the initial point")]
    GridExhausted,
    #[error("t2 = {t} is not on the grid (nearest {nearest})")]
    OffGrid { t: f64, nearest: f64 },
    #[error("transfer function is singular at lambda = {0}")]
    SingularValue(C64),
    #[error("contour quadrature did not converge")]
    QuadratureDiverged,
    #[error("realizations are not similar (residual {residual:e})")]
    NotSimilar { residual: f64 },
    #[error("right-hand side not in the range of the commutator (residual {residual:e})")]
    NotInRange { residual: f64 },
    #[error("vessel-parameter constraint violated (residual {residual:e})")]
    ConstraintViolated { residual: f64 },
    #[error("interpolation problem infeasible (lambda_min = {lambda_min:e})")]
    Infeasible { lambda_min: f64 },
    #[error("Theta is singular at lambda = {0}")]
    SingularTheta(C64),
    #[error("internal consistency check failed: {what} (residual {residual:e})")]
    InternalMismatch { what: &'static str, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
