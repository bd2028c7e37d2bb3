//! Rational σ₁-inner matrix functions in state-space form, tangential Schur steps, and their
//! evolution as conservative vessels in a second variable t₂.
//!
//! The central object is a [`Realization`] `(A₁, B, 𝕏; σ₁)` with transfer function
//! `S(λ) = I − B*𝕏⁻¹(λI − A₁)⁻¹Bσ₁`. [`schur`] builds and factors such functions,
//! [`vessel`] evolves them in t₂, [`moments`] and [`models`] cover the Markov-moment
//! identities and the Sturm–Liouville / NLS parameter families, and [`interp`] solves
//! Nevanlinna–Pick interpolation problems inside the vessel class.

pub mod error;
pub mod expr;
pub mod fixtures;
pub mod interp;
pub mod json;
pub mod matcore;
pub mod models;
pub mod moments;
pub mod random;
pub mod realization;
pub mod schur;
pub mod taylor;
pub mod vessel;

pub use error::{Error, Result};
pub use expr::Expression;
pub use interp::{
    feasibility_same_t2, multi_t2_verify, solve_same_t2, FeasibilityReport, InterpNode, MultiT2Candidate,
    MultiT2Options, MultiT2Report, NpProblem, NpSolution, PositivePair,
};
pub use matcore::{CMatrix, OdeGrid, Tolerance, C64};
pub use models::{NlsModel, SlModel};
pub use moments::{CommutatorSolveReport, MomentSequence, NlsInitial, SlInitial};
pub use realization::Realization;
pub use schur::{SchurStepData, SearchGrid, ThetaFunction};
pub use taylor::{ScalarFn, Taylor};
pub use vessel::{ContourSpec, Lde, VesselParams, VesselTrajectory};
