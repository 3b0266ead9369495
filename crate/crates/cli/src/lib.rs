//! Scenario runner for `proxy-dynamics`: loads scenario files, runs
//! simulations, sweeps and checks, and writes CSV, SVG and TOML summaries.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod commands;
pub mod config;
pub mod report;
pub mod svg;

pub use commands::{cmd_check, cmd_compare, cmd_run, cmd_sweep, Options, Outcome};
pub use config::{Scenario, ScenarioConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}{message}", path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Parse { path: Option<PathBuf>, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] proxy_dynamics::ModelError),
    #[error(transparent)]
    Sim(#[from] proxy_dynamics::SimError),
    #[error(transparent)]
    Analysis(#[from] proxy_dynamics::analysis::AnalysisError),
}

impl CliError {
    pub(crate) fn with_path(self, path: &Path) -> CliError {
        match self {
            CliError::Invalid(m) => CliError::Invalid(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}
