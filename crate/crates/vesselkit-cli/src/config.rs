//! Scenario configuration files.

use serde::Deserialize;
use vesselkit_core::fixtures;
use vesselkit_core::json::{complex_from_json, matrix_from_json, ComplexJson, MatrixJson};
use vesselkit_core::models::{nls_vessel_params, sl_vessel_params};
use vesselkit_core::{Expression, InterpNode, Realization, VesselParams, C64};

pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    SchurDemo(SchurDemo),
    VesselEvolve(VesselEvolve),
    Moments(MomentsRun),
    SlModel(SlModelRun),
    NlsModel(NlsModelRun),
    NpSolve(NpSolve),
    NpVerify(NpVerify),
    ResidualSuite(ResidualSuite),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::SchurDemo(_) => "schur_demo",
            Scenario::VesselEvolve(_) => "vessel_evolve",
            Scenario::Moments(_) => "moments",
            Scenario::SlModel(_) => "sl_model",
            Scenario::NlsModel(_) => "nls_model",
            Scenario::NpSolve(_) => "np_solve",
            Scenario::NpVerify(_) => "np_verify",
            Scenario::ResidualSuite(_) => "residual_suite",
        }
    }
}

/// Built-in realizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureName {
    FixA,
    FixC,
    Soliton,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum RealizationSpec {
    Fixture { fixture: FixtureName },
    Inline(Box<Realization>),
}

impl RealizationSpec {
    pub fn build(&self) -> Realization {
        match self {
            RealizationSpec::Fixture { fixture: FixtureName::FixA } => fixtures::fix_a(),
            RealizationSpec::Fixture { fixture: FixtureName::FixC } => fixtures::fix_c(),
            RealizationSpec::Fixture { fixture: FixtureName::Soliton } => fixtures::fix_soliton(),
            RealizationSpec::Inline(r) => (**r).clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamsSpec {
    Sl,
    Nls,
    Constant { sigma1: MatrixJson, sigma2: MatrixJson, gamma: MatrixJson },
}

impl ParamsSpec {
    pub fn build(&self, interval: (f64, f64)) -> vesselkit_core::Result<VesselParams> {
        match self {
            ParamsSpec::Sl => sl_vessel_params(interval),
            ParamsSpec::Nls => nls_vessel_params(interval),
            ParamsSpec::Constant { sigma1, sigma2, gamma } => VesselParams::constant(
                interval,
                matrix_from_json(sigma1, 0)?,
                matrix_from_json(sigma2, 0)?,
                matrix_from_json(gamma, 0)?,
            ),
        }
    }
}

pub fn complexes(v: &[ComplexJson]) -> Vec<C64> {
    v.iter().map(|&z| complex_from_json(z)).collect()
}

fn unit_interval() -> [f64; 2] {
    [0.0, 1.0]
}

fn default_lambdas() -> Vec<ComplexJson> {
    vec![[1.0, 1.0], [2.0, 0.0], [0.5, -2.0]]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchurDemo {
    #[serde(default = "SchurDemo::default_instances")]
    pub instances: usize,
    #[serde(default = "SchurDemo::default_samples")]
    pub lambda_samples: usize,
    #[serde(default = "SchurDemo::default_p")]
    pub p: Vec<usize>,
    #[serde(default = "SchurDemo::default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "SchurDemo::default_margin")]
    pub margin: f64,
    pub seed: Option<u64>,
}

impl SchurDemo {
    fn default_instances() -> usize {
        200
    }
    fn default_samples() -> usize {
        50
    }
    fn default_p() -> Vec<usize> {
        vec![1, 2, 3]
    }
    fn default_max_dim() -> usize {
        4
    }
    fn default_margin() -> f64 {
        1e-3
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VesselEvolve {
    pub realization: RealizationSpec,
    pub params: ParamsSpec,
    #[serde(default = "unit_interval")]
    pub interval: [f64; 2],
    pub t2_0: Option<f64>,
    pub steps: Option<usize>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<ComplexJson>,
    #[serde(default = "VesselEvolve::default_tolerance")]
    pub tolerance: f64,
}

impl VesselEvolve {
    fn default_tolerance() -> f64 {
        1e-5
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsRun {
    pub realization: RealizationSpec,
    pub params: ParamsSpec,
    #[serde(default = "unit_interval")]
    pub interval: [f64; 2],
    pub t2_0: Option<f64>,
    pub steps: Option<usize>,
    #[serde(default = "MomentsRun::default_levels")]
    pub levels: usize,
}

impl MomentsRun {
    fn default_levels() -> usize {
        4
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlInitialJson {
    #[serde(default)]
    pub trace: Vec<ComplexJson>,
    #[serde(default)]
    pub h21: Vec<ComplexJson>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlsInitialJson {
    #[serde(default)]
    pub h11: Vec<ComplexJson>,
    #[serde(default)]
    pub h22: Vec<ComplexJson>,
}

/// Pads missing initial values with zeros.
pub fn padded(v: &[ComplexJson], levels: usize) -> Vec<C64> {
    let mut out = complexes(v);
    out.resize(levels.max(out.len()), C64::new(0.0, 0.0));
    out
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlModelRun {
    pub beta: Option<Expression>,
    pub tau: Option<Expression>,
    #[serde(default = "unit_interval")]
    pub interval: [f64; 2],
    pub steps: Option<usize>,
    #[serde(default = "SlModelRun::default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub initial: SlInitialJson,
    /// Optional realization evolved under the SL parameters and compared with the model.
    pub realization: Option<RealizationSpec>,
    pub t2_0: Option<f64>,
    #[serde(default = "SlModelRun::default_lambda")]
    pub lambda: ComplexJson,
    #[serde(default = "SlModelRun::default_u0")]
    pub u0: Vec<ComplexJson>,
}

impl SlModelRun {
    fn default_levels() -> usize {
        3
    }
    fn default_lambda() -> ComplexJson {
        [2.0, 0.0]
    }
    fn default_u0() -> Vec<ComplexJson> {
        vec![[1.0, 0.0], [0.0, 0.0]]
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlsModelRun {
    pub beta: Expression,
    #[serde(default = "unit_interval")]
    pub interval: [f64; 2],
    pub steps: Option<usize>,
    #[serde(default = "NlsModelRun::default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub initial: NlsInitialJson,
    pub realization: Option<RealizationSpec>,
    pub t2_0: Option<f64>,
}

impl NlsModelRun {
    fn default_levels() -> usize {
        2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeFixture {
    FixD,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NpSolve {
    pub fixture: Option<NodeFixture>,
    pub params: Option<ParamsSpec>,
    #[serde(default)]
    pub nodes: Vec<InterpNode>,
    #[serde(default)]
    pub t2_ref: f64,
    #[serde(default = "unit_interval")]
    pub interval: [f64; 2],
    pub steps: Option<usize>,
    #[serde(default = "NpSolve::default_omegas")]
    pub omegas: Vec<f64>,
    #[serde(default = "NpSolve::default_kernel_points")]
    pub kernel_points: Vec<ComplexJson>,
}

impl NpSolve {
    fn default_omegas() -> Vec<f64> {
        (0..41).map(|k| 10f64.powf(-2.0 + 0.1 * k as f64)).flat_map(|w| [-w, w]).collect()
    }
    fn default_kernel_points() -> Vec<ComplexJson> {
        vec![[1.0, 0.0], [1.0, 1.0], [2.0, 0.0]]
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateJson {
    pub s0: RealizationSpec,
    pub node: InterpNode,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NpVerify {
    pub params: ParamsSpec,
    #[serde(default = "unit_interval")]
    pub interval: [f64; 2],
    pub candidates: Vec<CandidateJson>,
    pub steps: Option<usize>,
    pub contour_nodes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteFixture {
    FixB,
    FixC,
    Soliton,
    FixD,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualSuite {
    pub fixture: SuiteFixture,
    pub steps: Option<usize>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<ComplexJson>,
    #[serde(default = "ResidualSuite::default_t2s")]
    pub t2s: Vec<f64>,
}

impl ResidualSuite {
    fn default_t2s() -> Vec<f64> {
        vec![0.25, 0.5, 1.0]
    }
}
