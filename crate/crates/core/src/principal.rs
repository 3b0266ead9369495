//! Principal policies: at each interaction the principal looks at the run so
//! far and either hands the robot a proxy or switches it off.

use serde::{Deserialize, Serialize};

use crate::model::{Environment, ModelError, ProxySpec, StateVector};
use crate::robots::RobotKind;

pub const DEFAULT_TOL_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Proxy(ProxySpec),
    Off,
}

impl Directive {
    pub fn proxy(&self) -> Option<&ProxySpec> {
        match self {
            Directive::Proxy(p) => Some(p),
            Directive::Off => None,
        }
    }

    pub fn is_off(&self) -> bool {
        matches!(self, Directive::Off)
    }
}

/// Policy kinds. Proxy indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    /// Same proxy for the whole run, anchored at the initial state.
    Fixed { proxy: Vec<usize> },
    /// The `j` most sensitive attributes, re-anchored at every interaction.
    TopJ { j: usize },
    /// Most and least sensitive attribute; drives an impact-minimizing robot.
    MostLeast,
    /// Switches off on any utility drop since the previous interaction.
    OffGuard { inner: Box<PolicyKind>, drop_tol: f64 },
}

/// What the principal sees at an interaction.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    /// Zero-based interaction counter `T`.
    pub round: usize,
    pub initial: &'a StateVector,
    pub current: &'a StateVector,
    /// State at the previous interaction, if any.
    pub previous: Option<&'a StateVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalPolicy {
    pub kind: PolicyKind,
    /// Time between interactions.
    pub delta: f64,
    /// Sensitivity-gap tolerance below which adaptive policies stop.
    pub tol_gap: f64,
}

impl PrincipalPolicy {
    pub fn new(kind: PolicyKind, delta: f64) -> Self {
        Self { kind, delta, tol_gap: DEFAULT_TOL_GAP }
    }

    pub fn with_tol_gap(mut self, tol_gap: f64) -> Self {
        self.tol_gap = tol_gap;
        self
    }

    pub fn validate(&self, env: &Environment) -> Result<(), ModelError> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(ModelError::InvalidProxy(format!("interaction interval must be positive, got {}", self.delta)));
        }
        if !(self.tol_gap.is_finite() && self.tol_gap >= 0.0) {
            return Err(ModelError::InvalidProxy(format!("tol_gap must be non-negative, got {}", self.tol_gap)));
        }
        validate_kind(&self.kind, env)
    }

    /// Robot kind the policy requires, overriding the configured one.
    pub fn required_robot(&self) -> Option<RobotKind> {
        fn walk(kind: &PolicyKind) -> Option<RobotKind> {
            match kind {
                PolicyKind::MostLeast => Some(RobotKind::ImpactMin),
                PolicyKind::OffGuard { inner, .. } => walk(inner),
                _ => None,
            }
        }
        walk(&self.kind)
    }

    pub fn directive(&self, env: &Environment, obs: &Observation<'_>) -> Result<Directive, ModelError> {
        self.directive_for(&self.kind, env, obs)
    }

    fn directive_for(&self, kind: &PolicyKind, env: &Environment, obs: &Observation<'_>) -> Result<Directive, ModelError> {
        match kind {
            PolicyKind::Fixed { proxy } => directive_fixed(env, proxy, obs),
            PolicyKind::TopJ { j } => directive_top_j(env, *j, self.tol_gap, obs),
            PolicyKind::MostLeast => directive_most_least(env, self.tol_gap, obs),
            PolicyKind::OffGuard { inner, drop_tol } => {
                if utility_dropped(env, *drop_tol, obs)? {
                    Ok(Directive::Off)
                } else {
                    self.directive_for(inner, env, obs)
                }
            }
        }
    }
}

fn validate_kind(kind: &PolicyKind, env: &Environment) -> Result<(), ModelError> {
    match kind {
        PolicyKind::Fixed { proxy } => {
            ProxySpec::new(env, proxy, StateVector(env.bounds().to_vec()))?;
            Ok(())
        }
        PolicyKind::TopJ { j } => {
            if *j == 0 || *j >= env.dim() || *j > env.j_max() {
                Err(ModelError::InvalidProxy(format!(
                    "top_j needs 1 <= J <= J_max < L (J < L), got J = {j}, J_max = {}, L = {}",
                    env.j_max(),
                    env.dim()
                )))
            } else {
                Ok(())
            }
        }
        PolicyKind::MostLeast => {
            if env.j_max() < 2 {
                Err(ModelError::InvalidProxy("most_least needs J_max >= 2".into()))
            } else {
                Ok(())
            }
        }
        PolicyKind::OffGuard { inner, drop_tol } => {
            if !(drop_tol.is_finite() && *drop_tol >= 0.0) {
                return Err(ModelError::InvalidProxy(format!("drop_tol must be non-negative, got {drop_tol}")));
            }
            validate_kind(inner, env)
        }
    }
}

/// Constant proxy anchored at the initial state.
pub fn directive_fixed(env: &Environment, proxy: &[usize], obs: &Observation<'_>) -> Result<Directive, ModelError> {
    Ok(Directive::Proxy(ProxySpec::new(env, proxy, obs.initial.clone())?))
}

/// Top-`j` attributes by sensitivity at the current state, anchored there.
/// `Off` once the gap between rank `j` and rank `j + 1` drops below `tol_gap`.
pub fn directive_top_j(env: &Environment, j: usize, tol_gap: f64, obs: &Observation<'_>) -> Result<Directive, ModelError> {
    let ranking = env.rank_by_sensitivity(obs.current)?;
    match ranking.gap(j) {
        Some(gap) if gap >= tol_gap && gap > 0.0 => {
            Ok(Directive::Proxy(ProxySpec::new(env, ranking.top(j), obs.current.clone())?))
        }
        _ => Ok(Directive::Off),
    }
}

/// Most and least sensitive attribute, anchored at the current state.
/// `Off` at the joint fixpoint: equal sensitivities and an active constraint.
pub fn directive_most_least(env: &Environment, tol_gap: f64, obs: &Observation<'_>) -> Result<Directive, ModelError> {
    let ranking = env.rank_by_sensitivity(obs.current)?;
    let c = env.eval_constraint(obs.current)?;
    if ranking.spread() < tol_gap && c.abs() < env.tol_feas() {
        return Ok(Directive::Off);
    }
    let first = ranking.order[0];
    let last = *ranking.order.last().expect("non-empty ranking");
    Ok(Directive::Proxy(ProxySpec::new(env, &[first, last], obs.current.clone())?))
}

fn utility_dropped(env: &Environment, drop_tol: f64, obs: &Observation<'_>) -> Result<bool, ModelError> {
    let Some(prev) = obs.previous else {
        return Ok(false);
    };
    Ok(env.eval_utility(obs.current)? < env.eval_utility(prev)? - drop_tol)
}
