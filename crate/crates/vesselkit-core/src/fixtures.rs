//! Small reference problems with closed-form answers, shared by tests, benches and the CLI.

use crate::error::Result;
use crate::interp::{InterpNode, NpProblem};
use crate::matcore::{c, complex_matrix, eye, real_matrix, scalar, CMatrix};
use crate::models::sl_vessel_params;
use crate::realization::Realization;
use crate::schur::SchurStepData;
use crate::vessel::VesselParams;

/// `A₁ = −1, B = 1, 𝕏 = 1/2, σ₁ = 1`; transfer `(λ − 1)/(λ + 1)`.
pub fn fix_a() -> Realization {
    Realization::new(scalar(c(-1.0, 0.0)), scalar(c(1.0, 0.0)), scalar(c(0.5, 0.0)), eye(1))
        .expect("valid fixture")
}

/// Scalar parameters `σ₁ = σ₂ = 1, γ = 0` on [0, 1]. With [`fix_a`]: `B = e^t`, `𝕏 = e^{2t}/2`.
pub fn fix_b_params() -> VesselParams {
    VesselParams::constant((0.0, 1.0), eye(1), eye(1), scalar(c(0.0, 0.0))).expect("valid fixture")
}

/// SL parameters with `A₁ = −1`, `B₀ = [1, 1]/√2`, `𝕏₀ = 1/2`.
pub fn fix_c() -> Realization {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Realization::new(
        scalar(c(-1.0, 0.0)),
        real_matrix(1, 2, &[s, s]),
        scalar(c(0.5, 0.0)),
        crate::models::sl_matrices().0,
    )
    .expect("valid fixture")
}

/// SL parameters on [0, 1].
pub fn sl_params() -> VesselParams {
    sl_vessel_params((0.0, 1.0)).expect("valid fixture")
}

/// SL realization whose trajectory has `𝕏 = 1 + e^{2t}`, so `β = −1 − tanh t` and
/// `q = 2β' = −2 sech² t`.
pub fn fix_soliton() -> Realization {
    let r2 = std::f64::consts::SQRT_2;
    Realization::new(
        scalar(c(0.0, -1.0)),
        complex_matrix(1, 2, &[c(0.0, -r2), c(r2, 0.0)]),
        scalar(c(2.0, 0.0)),
        crate::models::sl_matrices().0,
    )
    .expect("valid fixture")
}

/// The two scalar nodes `(w, ξ, η) = (1, 1, 0)` and `(2, 1, 0.2)`.
pub fn fix_d_steps() -> Vec<SchurStepData> {
    vec![
        SchurStepData::scalar(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).expect("valid fixture"),
        SchurStepData::scalar(c(2.0, 0.0), c(1.0, 0.0), c(0.2, 0.0)).expect("valid fixture"),
    ]
}

/// [`fix_d_steps`] at t₂ = 0 under [`fix_b_params`].
pub fn fix_d_problem() -> Result<NpProblem> {
    let nodes = fix_d_steps()
        .into_iter()
        .map(|s| InterpNode::new(s.w, s.xi, s.eta, 0.0))
        .collect::<Result<Vec<_>>>()?;
    NpProblem::new(fix_b_params(), nodes, 0.0)
}

/// Exact Gram matrix of the FIX-D nodes.
pub fn fix_d_gram() -> CMatrix {
    real_matrix(2, 2, &[0.5, 1.0 / 3.0, 1.0 / 3.0, 0.24])
}
