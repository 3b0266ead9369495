//! Scenario files: TOML with `environment`, `robot`, `policy`, `sim`,
//! `output` and `analysis` sections. Attribute indices are one-based.

use std::fs;
use std::path::{Path, PathBuf};

use proxy_dynamics::principal::DEFAULT_TOL_GAP;
use proxy_dynamics::robots::DEFAULT_TOL_CONV;
use proxy_dynamics::{Environment, PolicyKind, RobotKind, SeparableFunction, SimConfig, StateVector, TermSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Used to name output files.
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub environment: EnvironmentSection,
    pub robot: RobotKind,
    pub policy: PolicySection,
    pub sim: SimSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    pub bounds: Vec<f64>,
    /// `s0`.
    pub initial: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<usize>,
    #[serde(default = "default_tol_feas")]
    pub tol_feas: f64,
    #[serde(default)]
    pub utility_offset: f64,
    #[serde(default)]
    pub constraint_offset: f64,
    pub utility: Vec<TermSpec>,
    pub constraint: Vec<TermSpec>,
}

/// Mirrors [`PolicyKind`] with one-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySection {
    Fixed {
        proxy: Vec<usize>,
    },
    TopJ {
        j: usize,
    },
    MostLeast,
    OffGuard {
        #[serde(default)]
        drop_tol: f64,
        inner: Box<PolicySection>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub delta: f64,
    pub dt: f64,
    pub t_max: f64,
    pub max_rate: f64,
    #[serde(default = "default_tol_conv")]
    pub tol_conv: f64,
    #[serde(default = "default_tol_gap")]
    pub tol_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Relative paths resolve against the working directory.
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub plot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out_dir(), plot: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Grid points per axis for the optimum oracle; derived from `L` if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_resolution: Option<usize>,
    /// Utility levels reported by bound sweeps.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub u_levels: Vec<f64>,
    /// Default sweep when `--param` / `--values` are not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_param: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep_values: Vec<f64>,
}

fn default_tol_feas() -> f64 {
    proxy_dynamics::model::DEFAULT_TOL_FEAS
}
fn default_tol_conv() -> f64 {
    DEFAULT_TOL_CONV
}
fn default_tol_gap() -> f64 {
    DEFAULT_TOL_GAP
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn yes() -> bool {
    true
}

/// A validated scenario, ready to simulate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub env: Environment,
    pub sim: SimConfig,
}

impl PolicySection {
    fn to_kind(&self, dim: usize) -> Result<PolicyKind, CliError> {
        Ok(match self {
            PolicySection::Fixed { proxy } => PolicyKind::Fixed { proxy: zero_based(proxy, dim)? },
            PolicySection::TopJ { j } => PolicyKind::TopJ { j: *j },
            PolicySection::MostLeast => PolicyKind::MostLeast,
            PolicySection::OffGuard { drop_tol, inner } => {
                PolicyKind::OffGuard { inner: Box::new(inner.to_kind(dim)?), drop_tol: *drop_tol }
            }
        })
    }

    /// The fixed proxy, looking through guards.
    pub fn fixed_proxy(&self) -> Option<&[usize]> {
        match self {
            PolicySection::Fixed { proxy } => Some(proxy),
            PolicySection::OffGuard { inner, .. } => inner.fixed_proxy(),
            _ => None,
        }
    }
}

fn zero_based(proxy: &[usize], dim: usize) -> Result<Vec<usize>, CliError> {
    if proxy.len() >= dim {
        return Err(CliError::Invalid(format!(
            "policy.proxy has J = {} attributes but the environment has L = {dim}; a proxy must satisfy J < L",
            proxy.len()
        )));
    }
    proxy
        .iter()
        .map(|&i| {
            if i == 0 || i > dim {
                Err(CliError::Invalid(format!("policy.proxy index {i} out of range 1..={dim}")))
            } else {
                Ok(i - 1)
            }
        })
        .collect()
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse { path: None, message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        toml::from_str(&text).map_err(|e| CliError::Parse { path: Some(path.to_path_buf()), message: e.to_string() })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario configs always serialize")
    }

    pub fn dim(&self) -> usize {
        self.environment.bounds.len()
    }

    pub fn build_environment(&self) -> Result<Environment, CliError> {
        let e = &self.environment;
        let dim = e.bounds.len();
        for (name, len) in [("utility", e.utility.len()), ("constraint", e.constraint.len()), ("initial", e.initial.len())] {
            if len != dim {
                return Err(CliError::Invalid(format!(
                    "environment.{name} has {len} entries but environment.bounds has {dim}"
                )));
            }
        }
        if dim == 0 {
            return Err(CliError::Invalid("environment.bounds is empty".into()));
        }
        let utility = SeparableFunction::new(e.utility.clone(), e.utility_offset)?;
        let constraint = SeparableFunction::new(e.constraint.clone(), e.constraint_offset)?;
        let j_max = e.j_max.unwrap_or(dim.saturating_sub(1).max(1));
        if dim >= 2 && j_max >= dim {
            return Err(CliError::Invalid(format!("environment.j_max = {j_max} must satisfy J < L = {dim}")));
        }
        Ok(Environment::with_options(e.bounds.clone(), utility, constraint, j_max, e.tol_feas)?)
    }

    pub fn build_sim(&self) -> Result<SimConfig, CliError> {
        let s = &self.sim;
        Ok(SimConfig {
            delta: s.delta,
            dt: s.dt,
            t_max: s.t_max,
            max_rate: s.max_rate,
            tol_conv: s.tol_conv,
            tol_gap: s.tol_gap,
            robot: self.robot,
            policy: self.policy.to_kind(self.dim())?,
            initial: StateVector(self.environment.initial.clone()),
        })
    }

    /// Checks every invariant and assembles the scenario.
    pub fn build(self) -> Result<Scenario, CliError> {
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return Err(CliError::Invalid(format!("id {:?} must be a non-empty file-name stem", self.id)));
        }
        if self.dim() < 2 {
            return Err(CliError::Invalid(format!(
                "the environment needs L >= 2 attributes so that a proxy with J < L exists, got L = {}",
                self.dim()
            )));
        }
        let env = self.build_environment()?;
        let sim = self.build_sim()?;
        sim.validate(&env)?;
        Ok(Scenario { config: self, env, sim })
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        ScenarioConfig::load(path)?.build().map_err(|e| e.with_path(path))
    }

    pub fn oracle_resolution(&self) -> usize {
        self.config
            .analysis
            .oracle_resolution
            .unwrap_or_else(|| proxy_dynamics::analysis::default_resolution(self.env.dim()))
    }
}
