//! Library side of the `vesselkit` binary: scenario configs, runners and report writing.

pub mod config;
pub mod report;
pub mod scenarios;

use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub use config::Scenario;
pub use report::{Check, Checks, Outcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Numeric(#[from] vesselkit_core::Error),
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub steps: Option<usize>,
    pub seed: Option<u64>,
}

pub fn parse_config(text: &str) -> Result<Scenario, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))
}

pub fn load_config(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<Outcome, CliError> {
    scenarios::run_scenario(scenario, opts)
}

/// Writes `report.json` and the scenario's CSV files into `dir`.
pub fn write_outcome(outcome: &Outcome, dir: &Path) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, contents) in &outcome.files {
        let p = dir.join(name);
        fs::write(&p, contents).map_err(io(&p))?;
    }
    let p = dir.join("report.json");
    fs::write(&p, outcome.report_json()).map_err(io(&p))
}
