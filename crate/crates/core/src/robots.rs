//! Single-step agent behaviors.
//!
//! Each stepper maps `(environment, proxy, state)` to the next state after
//! one integration substep of length `dt`. The ascent steppers realize
//! projected gradient ascent on the proxy utility:
//!
//! 1. direction: proxy gradient, projected onto the tangent set of the
//!    constraint when it is active and onto the face of any lower bound
//!    (or efficiency cap) it would cross; then capped to norm `max_rate`;
//! 2. trial point `s + h d` with components clamped exactly to their bounds;
//! 3. restoration of `C <= 0` by a monotone line solve along `-grad C`;
//! 4. acceptance when the proxy utility did not decrease, else `h /= 2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Environment, ModelError, ProxySpec, StateVector};

/// Maximum number of step halvings before a step is declared stuck.
pub const MAX_HALVINGS: usize = 40;

pub const DEFAULT_TOL_CONV: f64 = 1e-10;

/// Allowed proxy-utility decrease per accepted ascent step (rounding).
pub const ASCENT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RobotError {
    #[error("no feasible improving step after {halvings} halvings")]
    Stuck { halvings: usize },
    #[error("unmentioned attribute {} moved away from its anchor", index + 1)]
    AnchorDrift { index: usize },
    #[error("every unmentioned attribute is already at its lower bound")]
    Exhausted,
    #[error("state is not feasible: {0}")]
    Infeasible(String),
    #[error("invalid robot parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobotKind {
    FixedProxy,
    ImpactMin,
    Efficient,
    Adversarial { epsilon: f64 },
}

impl RobotKind {
    pub fn name(&self) -> &'static str {
        match self {
            RobotKind::FixedProxy => "fixed_proxy",
            RobotKind::ImpactMin => "impact_min",
            RobotKind::Efficient => "efficient",
            RobotKind::Adversarial { .. } => "adversarial",
        }
    }
}

/// Robot behavior plus integration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotStep {
    pub kind: RobotKind,
    pub dt: f64,
    /// Upper bound on the norm of the rate function for the ascent kinds.
    pub max_rate: f64,
    pub tol_conv: f64,
}

impl RobotStep {
    pub fn new(kind: RobotKind, dt: f64, max_rate: f64) -> Result<Self, RobotError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(dt) {
            return Err(RobotError::Invalid(format!("dt must be positive, got {dt}")));
        }
        if !positive(max_rate) {
            return Err(RobotError::Invalid(format!("max_rate must be positive, got {max_rate}")));
        }
        if let RobotKind::Adversarial { epsilon } = kind {
            if !positive(epsilon) {
                return Err(RobotError::Invalid(format!("adversarial epsilon must be positive, got {epsilon}")));
            }
        }
        Ok(Self { kind, dt, max_rate, tol_conv: DEFAULT_TOL_CONV })
    }

    pub fn with_tol_conv(mut self, tol_conv: f64) -> Self {
        self.tol_conv = tol_conv;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: StateVector,
    pub proxy_value_before: f64,
    pub proxy_value_after: f64,
    /// A bound, cap, or face projection was engaged.
    pub clipped: bool,
    /// Step displacement `|d| dt` fell below `tol_conv`; `next_state` equals the input.
    pub converged: bool,
    /// Step length actually taken after backtracking.
    pub dt_used: f64,
}

/// Ascent direction before rate capping.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub d: Vec<f64>,
    /// Some coordinate was frozen at a bound or cap.
    pub clipped: bool,
    pub constraint_active: bool,
}

/// Projects the proxy gradient onto the set of directions that keep the
/// active constraint level and do not push frozen coordinates through their
/// lower bounds (or through `caps`, where given).
pub fn projected_direction(
    env: &Environment,
    proxy: &ProxySpec,
    s: &StateVector,
    movable: &[bool],
    caps: Option<&[f64]>,
) -> Result<Direction, ModelError> {
    let g = proxy.gradient(env, s)?;
    let c = env.eval_constraint(s)?;
    let constraint_active = c >= -env.tol_feas();
    let normal = if constraint_active { Some(env.constraint().grad(s)?) } else { None };
    let bounds = env.bounds();
    let mut free = movable.to_vec();
    let mut clipped = false;
    loop {
        let mut d: Vec<f64> = g.iter().zip(&free).map(|(&gi, &f)| if f { gi } else { 0.0 }).collect();
        if let Some(n) = &normal {
            let mut nn = 0.0;
            let mut dn = 0.0;
            for i in 0..d.len() {
                if free[i] {
                    nn += n[i] * n[i];
                    dn += d[i] * n[i];
                }
            }
            if nn > 0.0 {
                let lambda = dn / nn;
                for i in 0..d.len() {
                    if free[i] {
                        d[i] -= lambda * n[i];
                    }
                }
            }
        }
        let mut blocked = false;
        for i in 0..d.len() {
            if !free[i] {
                continue;
            }
            let at_floor = s[i] <= bounds[i] && d[i] < 0.0;
            let at_cap = caps.is_some_and(|c| s[i] >= c[i] && d[i] > 0.0);
            if at_floor || at_cap {
                free[i] = false;
                blocked = true;
            }
        }
        if !blocked {
            return Ok(Direction { d, clipped, constraint_active });
        }
        clipped = true;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Fixed,
    ImpactMin,
    Efficient,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn require_feasible(env: &Environment, s: &StateVector) -> Result<(), RobotError> {
    if env.is_feasible(s)? {
        Ok(())
    } else {
        Err(RobotError::Infeasible(format!(
            "C(s) = {}, bounds {:?}",
            env.eval_constraint(s)?,
            env.bounds()
        )))
    }
}

/// Pulls `cand` back onto `C <= 0` along `-grad C` over the masked,
/// not-yet-clamped coordinates, clamping at bounds on the way.
/// Returns false when no point on that path is feasible.
pub(crate) fn restore_feasibility(env: &Environment, cand: &mut StateVector, mask: &[bool]) -> Result<bool, ModelError> {
    let c0 = env.eval_constraint(cand)?;
    if c0 <= 0.0 {
        return Ok(true);
    }
    let bounds = env.bounds();
    let grad = env.constraint().grad(cand)?;
    let dir: Vec<f64> = (0..cand.len())
        .map(|i| if mask[i] && cand[i] > bounds[i] { grad[i] } else { 0.0 })
        .collect();
    let rr: f64 = dir.iter().map(|x| x * x).sum();
    if rr <= 0.0 {
        return Ok(false);
    }
    let base = cand.clone();
    let point = |lambda: f64| -> StateVector {
        let mut p = base.clone();
        for i in 0..p.len() {
            if dir[i] != 0.0 {
                p[i] = (base[i] - lambda * dir[i]).max(bounds[i]);
            }
        }
        p
    };
    let all_clamped = |p: &StateVector| (0..p.len()).all(|i| dir[i] == 0.0 || p[i] <= bounds[i]);

    let mut hi = c0 / rr;
    let mut expansions = 0;
    loop {
        let p = point(hi);
        if env.eval_constraint(&p)? <= 0.0 {
            break;
        }
        if all_clamped(&p) || expansions > 200 {
            return Ok(false);
        }
        hi *= 2.0;
        expansions += 1;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if env.eval_constraint(&point(mid))? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    *cand = point(hi);
    Ok(true)
}

/// Efficiency budget clause: when an unmentioned attribute dropped between
/// `before` and `candidate` while the constraint moved into the interior,
/// the freed budget is spent on the proxy attributes (along the proxy
/// gradient) until `C` returns to `min(C(before), 0)`.
pub fn enforce_efficiency(
    env: &Environment,
    proxy: &ProxySpec,
    before: &StateVector,
    candidate: StateVector,
) -> Result<StateVector, ModelError> {
    let dim = env.dim();
    let target = env.eval_constraint(before)?.min(0.0);
    let dropped = proxy.unmentioned(dim).iter().any(|&k| candidate[k] < before[k]);
    let c_cand = env.eval_constraint(&candidate)?;
    if !dropped || c_cand >= target - env.tol_feas() {
        return Ok(candidate);
    }
    let g = proxy.gradient(env, &candidate)?;
    let base = candidate;
    let point = |lambda: f64| -> StateVector {
        let mut p = base.clone();
        for &j in proxy.indices() {
            p[j] = base[j] + lambda * g[j];
        }
        p
    };
    let slope: f64 = {
        let n = env.constraint().grad(&base)?;
        proxy.indices().iter().map(|&j| g[j] * n[j]).sum()
    };
    if slope <= 0.0 {
        return Ok(base);
    }
    let mut lo = 0.0;
    let mut hi = (target - c_cand) / slope;
    let mut expansions = 0;
    while env.eval_constraint(&point(hi))? < target && expansions < 200 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if env.eval_constraint(&point(mid))? > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(point(lo))
}

fn ascend(env: &Environment, proxy: &ProxySpec, s: &StateVector, robot: &RobotStep, mode: Mode, h0: f64) -> Result<StepOutcome, RobotError> {
    let dim = env.dim();
    if s.len() != dim {
        return Err(ModelError::DimensionMismatch { expected: dim, got: s.len() }.into());
    }
    require_feasible(env, s)?;
    let anchor = proxy.anchor();
    match mode {
        Mode::ImpactMin => {
            if let Some(index) = proxy.unmentioned(dim).into_iter().find(|&k| s[k].to_bits() != anchor[k].to_bits()) {
                return Err(RobotError::AnchorDrift { index });
            }
        }
        Mode::Efficient => {
            if let Some(index) = proxy.unmentioned(dim).into_iter().find(|&k| s[k] > anchor[k] + env.tol_feas()) {
                return Err(RobotError::AnchorDrift { index });
            }
        }
        Mode::Fixed => {}
    }

    let movable: Vec<bool> = match mode {
        Mode::ImpactMin => proxy.mask(dim),
        _ => vec![true; dim],
    };
    let caps: Option<Vec<f64>> = match mode {
        Mode::Efficient => Some((0..dim).map(|i| if proxy.contains(i) { f64::INFINITY } else { anchor[i] }).collect()),
        _ => None,
    };

    let before = proxy.value(env, s)?;
    let dir = projected_direction(env, proxy, s, &movable, caps.as_deref())?;
    let mut d = dir.d;
    let mut clipped = dir.clipped;
    let len = norm(&d);
    if len > robot.max_rate {
        let f = robot.max_rate / len;
        d.iter_mut().for_each(|x| *x *= f);
    }
    if norm(&d) * robot.dt < robot.tol_conv {
        return Ok(StepOutcome {
            next_state: s.clone(),
            proxy_value_before: before,
            proxy_value_after: before,
            clipped,
            converged: true,
            dt_used: 0.0,
        });
    }

    // restoration only touches coordinates the step actually moves
    let moving: Vec<bool> = (0..dim).map(|i| movable[i] && d[i] != 0.0).collect();
    let bounds = env.bounds();
    let mut h = h0;
    for _ in 0..=MAX_HALVINGS {
        let mut cand = s.clone();
        let mut clamped = false;
        for i in 0..dim {
            if !movable[i] || d[i] == 0.0 {
                continue;
            }
            let mut x = s[i] + h * d[i];
            if x < bounds[i] {
                x = bounds[i];
                clamped = true;
            }
            if let Some(c) = &caps {
                if x > c[i] {
                    x = c[i];
                    clamped = true;
                }
            }
            cand[i] = x;
        }
        if restore_feasibility(env, &mut cand, &moving)? {
            if mode == Mode::Efficient {
                cand = enforce_efficiency(env, proxy, s, cand)?;
            }
            if env.is_feasible(&cand)? {
                let after = proxy.value(env, &cand)?;
                if after >= before - ASCENT_SLACK {
                    return Ok(StepOutcome {
                        next_state: cand,
                        proxy_value_before: before,
                        proxy_value_after: after,
                        clipped: clipped || clamped,
                        converged: false,
                        dt_used: h,
                    });
                }
            }
        }
        h *= 0.5;
        clipped = true;
    }
    Err(RobotError::Stuck { halvings: MAX_HALVINGS })
}

/// Projected gradient ascent on the proxy utility.
pub fn step_fixed_proxy(env: &Environment, proxy: &ProxySpec, s: &StateVector, robot: &RobotStep) -> Result<StepOutcome, RobotError> {
    ascend(env, proxy, s, robot, Mode::Fixed, robot.dt)
}

/// Ascent restricted to the slice where unmentioned attributes equal the
/// proxy anchor; they are never written, so they stay bit-identical.
pub fn step_impact_min(env: &Environment, proxy: &ProxySpec, s: &StateVector, robot: &RobotStep) -> Result<StepOutcome, RobotError> {
    ascend(env, proxy, s, robot, Mode::ImpactMin, robot.dt)
}

/// Ascent that never raises unmentioned attributes above the proxy anchor
/// and spends any budget freed by lowering them on the proxy attributes.
pub fn step_efficient(env: &Environment, proxy: &ProxySpec, s: &StateVector, robot: &RobotStep) -> Result<StepOutcome, RobotError> {
    ascend(env, proxy, s, robot, Mode::Efficient, robot.dt)
}

/// Worst-case mover: rate `epsilon` on the first proxy attribute and
/// `-1/epsilon` on the first unmentioned attribute that still has headroom.
/// Not subject to `max_rate`.
pub fn step_adversarial(env: &Environment, proxy: &ProxySpec, epsilon: f64, s: &StateVector, robot: &RobotStep) -> Result<StepOutcome, RobotError> {
    adversarial(env, proxy, epsilon, s, robot.dt)
}

fn adversarial(env: &Environment, proxy: &ProxySpec, epsilon: f64, s: &StateVector, h0: f64) -> Result<StepOutcome, RobotError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(RobotError::Invalid(format!("adversarial epsilon must be positive, got {epsilon}")));
    }
    require_feasible(env, s)?;
    let bounds = env.bounds();
    let j = proxy.indices()[0];
    let k = proxy
        .unmentioned(env.dim())
        .into_iter()
        .find(|&k| s[k] > bounds[k])
        .ok_or(RobotError::Exhausted)?;
    let before = proxy.value(env, s)?;
    let mut h = h0;
    for _ in 0..=MAX_HALVINGS {
        let mut next = s.clone();
        next[j] = s[j] + h * epsilon;
        let raw = s[k] - h / epsilon;
        let clipped = raw < bounds[k];
        next[k] = raw.max(bounds[k]);
        if env.is_feasible(&next)? {
            let after = proxy.value(env, &next)?;
            return Ok(StepOutcome {
                next_state: next,
                proxy_value_before: before,
                proxy_value_after: after,
                clipped,
                converged: false,
                dt_used: h,
            });
        }
        h *= 0.5;
    }
    Err(RobotError::Stuck { halvings: MAX_HALVINGS })
}

/// A robot plus the backtracking scale carried between substeps while the
/// proxy stays the same.
#[derive(Debug, Clone)]
pub struct Stepper {
    robot: RobotStep,
    scale: f64,
}

impl Stepper {
    pub fn new(robot: RobotStep) -> Self {
        Self { robot, scale: 1.0 }
    }

    pub fn robot(&self) -> &RobotStep {
        &self.robot
    }

    /// Forget carried state; called when the proxy changes.
    pub fn reset(&mut self) {
        self.scale = 1.0;
    }

    pub fn step(&mut self, env: &Environment, proxy: &ProxySpec, s: &StateVector) -> Result<StepOutcome, RobotError> {
        let h0 = self.robot.dt * self.scale;
        let out = match self.robot.kind {
            RobotKind::FixedProxy => ascend(env, proxy, s, &self.robot, Mode::Fixed, h0),
            RobotKind::ImpactMin => ascend(env, proxy, s, &self.robot, Mode::ImpactMin, h0),
            RobotKind::Efficient => ascend(env, proxy, s, &self.robot, Mode::Efficient, h0),
            RobotKind::Adversarial { epsilon } => adversarial(env, proxy, epsilon, s, h0),
        }?;
        if !out.converged {
            self.scale = (2.0 * out.dt_used / self.robot.dt).min(1.0);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{contentrec, loglinear};

    fn robot(kind: RobotKind, dt: f64) -> RobotStep {
        RobotStep::new(kind, dt, 1.0).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    /// Independent hand projection `g - (g.n / n.n) n`.
    fn hand_projection(g: &[f64], n: &[f64]) -> Vec<f64> {
        let gn: f64 = g.iter().zip(n).map(|(a, b)| a * b).sum();
        let nn: f64 = n.iter().map(|x| x * x).sum();
        g.iter().zip(n).map(|(gi, ni)| gi - gn / nn * ni).collect()
    }

    #[test]
    fn projection_on_active_linear_constraint() {
        let env = loglinear(-0.9);
        let s: StateVector = [1.0; 4].into();
        let proxy = ProxySpec::new(&env, &[0, 1], s.clone()).unwrap();
        let dir = projected_direction(&env, &proxy, &s, &[true; 4], None).unwrap();
        let expected = hand_projection(&[0.5, 0.5, 0.0, 0.0], &[1.0; 4]);
        assert!(close(&expected, &[0.25, 0.25, -0.25, -0.25], 1e-15));
        assert!(close(&dir.d, &expected, 1e-15), "{:?}", dir.d);
        assert!(dir.constraint_active);
        assert!(!dir.clipped);
    }

    #[test]
    fn interior_step_is_plain_gradient() {
        let env = loglinear(-0.9);
        let s: StateVector = [0.5, 0.5, 1.0, 1.0].into();
        let proxy = ProxySpec::new(&env, &[0, 1], s.clone()).unwrap();
        let r = RobotStep::new(RobotKind::FixedProxy, 1e-3, 10.0).unwrap();
        let out = step_fixed_proxy(&env, &proxy, &s, &r).unwrap();
        let g = 1.0 / 1.5;
        assert!(close(out.next_state.as_slice(), &[0.5 + 1e-3 * g, 0.5 + 1e-3 * g, 1.0, 1.0], 1e-15));
        assert_eq!(out.next_state[2], 1.0);
        assert_eq!(out.next_state[3], 1.0);
        assert!(out.proxy_value_after > out.proxy_value_before);
    }

    #[test]
    fn rate_cap_limits_displacement() {
        let env = contentrec();
        let s: StateVector = [1.0, 2.0, 6.0, 7.0].into();
        let proxy = ProxySpec::new(&env, &[0, 1], s.clone()).unwrap();
        let r = RobotStep::new(RobotKind::FixedProxy, 0.01, 0.5).unwrap();
        let out = step_fixed_proxy(&env, &proxy, &s, &r).unwrap();
        let moved: f64 = out.next_state.iter().zip(s.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((moved - 0.005).abs() < 1e-12, "{moved}");
    }

    #[test]
    fn proxy_sup_state_is_a_fixpoint() {
        let env = loglinear(-0.9);
        let s: StateVector = [2.9, 2.9, -0.9, -0.9].into();
        let proxy = ProxySpec::new(&env, &[0, 1], [1.0; 4].into()).unwrap();
        let out = step_fixed_proxy(&env, &proxy, &s, &robot(RobotKind::FixedProxy, 1e-3)).unwrap();
        assert!(out.converged);
        assert_eq!(out.next_state, s);
    }

    #[test]
    fn curved_constraint_stays_feasible() {
        let env = contentrec();
        let mut s: StateVector = [1.0, 2.0, 6.0, 7.0].into();
        let proxy = ProxySpec::new(&env, &[0, 1], s.clone()).unwrap();
        let r = robot(RobotKind::FixedProxy, 0.05);
        let mut last = proxy.value(&env, &s).unwrap();
        for _ in 0..2000 {
            let out = step_fixed_proxy(&env, &proxy, &s, &r).unwrap();
            assert!(env.is_feasible(&out.next_state).unwrap());
            assert!(out.proxy_value_after >= last - ASCENT_SLACK);
            last = out.proxy_value_after;
            s = out.next_state;
        }
        assert!(env.eval_constraint(&s).unwrap().abs() < 1e-9);
    }

    #[test]
    fn impact_min_keeps_unmentioned_bits() {
        let env = loglinear(-0.9);
        let s0: StateVector = [0.5, 0.5, 1.0, 1.0].into();
        let proxy = ProxySpec::new(&env, &[0, 1], s0.clone()).unwrap();
        let r = robot(RobotKind::ImpactMin, 1e-2);
        let mut s = s0.clone();
        for _ in 0..500 {
            let out = step_impact_min(&env, &proxy, &s, &r).unwrap();
            assert_eq!(out.next_state[2].to_bits(), s0[2].to_bits());
            assert_eq!(out.next_state[3].to_bits(), s0[3].to_bits());
            let du = env.eval_utility(&out.next_state).unwrap() - env.eval_utility(&s).unwrap();
            let dp = out.proxy_value_after - out.proxy_value_before;
            assert_eq!(du, dp);
            s = out.next_state;
            if out.converged {
                break;
            }
        }
        assert!(close(s.as_slice(), &[1.0; 4], 1e-9), "{s:?}");
    }

    #[test]
    fn impact_min_rejects_anchor_drift() {
        let env = loglinear(-0.9);
        let proxy = ProxySpec::new(&env, &[0, 1], [0.5, 0.5, 1.0, 1.0].into()).unwrap();
        let s: StateVector = [0.5, 0.5, 0.9, 1.0].into();
        let err = step_impact_min(&env, &proxy, &s, &robot(RobotKind::ImpactMin, 1e-2)).unwrap_err();
        assert_eq!(err, RobotError::AnchorDrift { index: 2 });
    }

    #[test]
    fn impact_min_optimal_slice_converges_immediately() {
        let env = loglinear(-0.9);
        let s: StateVector = [1.0; 4].into();
        let proxy = ProxySpec::new(&env, &[0, 1, 2], s.clone()).unwrap();
        let out = step_impact_min(&env, &proxy, &s, &robot(RobotKind::ImpactMin, 1e-2)).unwrap();
        assert!(out.converged);
        assert_eq!(out.next_state, s);
    }

    #[test]
    fn efficient_direction_matches_projection_on_frontier() {
        let env = loglinear(-0.9);
        let s: StateVector = [1.0; 4].into();
        let proxy = ProxySpec::new(&env, &[0, 1], s.clone()).unwrap();
        let caps = [f64::INFINITY, f64::INFINITY, 1.0, 1.0];
        let dir = projected_direction(&env, &proxy, &s, &[true; 4], Some(&caps)).unwrap();
        assert!(close(&dir.d, &hand_projection(&[0.5, 0.5, 0.0, 0.0], &[1.0; 4]), 1e-15));
    }

    #[test]
    fn wasted_budget_is_respent_on_proxy() {
        let env = loglinear(-0.9);
        let before: StateVector = [1.0; 4].into();
        let proxy = ProxySpec::new(&env, &[0, 1], before.clone()).unwrap();
        let wasteful: StateVector = [1.0, 1.0, 0.5, 1.0].into();
        assert!(env.eval_constraint(&wasteful).unwrap() < 0.0);
        let fixed = enforce_efficiency(&env, &proxy, &before, wasteful).unwrap();
        assert!(close(fixed.as_slice(), &[1.25, 1.25, 0.5, 1.0], 1e-12), "{fixed:?}");
        assert!(env.eval_constraint(&fixed).unwrap().abs() < 1e-12);
        // no unmentioned drop: left alone
        let fine: StateVector = [0.9, 1.0, 1.0, 1.0].into();
        assert_eq!(enforce_efficiency(&env, &proxy, &before, fine.clone()).unwrap(), fine);
    }

    #[test]
    fn efficient_from_interior_holds_unmentioned() {
        let env = loglinear(-0.9);
        let s0: StateVector = [0.5, 0.5, 1.0, 1.0].into();
        let proxy = ProxySpec::new(&env, &[0, 1], s0.clone()).unwrap();
        let r = robot(RobotKind::Efficient, 1e-2);
        let mut s = s0.clone();
        loop {
            let c = env.eval_constraint(&s).unwrap();
            let out = step_efficient(&env, &proxy, &s, &r).unwrap();
            if c < -env.tol_feas() {
                assert_eq!(out.next_state[2], 1.0);
                assert_eq!(out.next_state[3], 1.0);
            } else {
                break;
            }
            s = out.next_state;
        }
        assert!(close(s.as_slice(), &[1.0, 1.0, 1.0, 1.0], 1e-12), "{s:?}");
    }

    #[test]
    fn adversarial_example() {
        let env = loglinear(-0.9);
        let s: StateVector = [1.0; 4].into();
        let proxy = ProxySpec::new(&env, &[0, 1], s.clone()).unwrap();
        let r = robot(RobotKind::Adversarial { epsilon: 0.01 }, 0.1);
        let out = step_adversarial(&env, &proxy, 0.01, &s, &r).unwrap();
        assert!(close(out.next_state.as_slice(), &[1.001, 1.0, -0.9, 1.0], 1e-15));
        assert!(out.clipped);
        let u = env.eval_utility(&out.next_state).unwrap();
        let oracle = 2.001f64.ln() + 2f64.ln() + 0.1f64.ln() + 2f64.ln();
        assert!((u - oracle).abs() < 1e-12);
        assert!((u - (-0.222644)).abs() < 1e-6);
        assert!(out.proxy_value_after > out.proxy_value_before);
    }

    #[test]
    fn adversarial_exhausted() {
        let env = loglinear(-0.9);
        let s: StateVector = [1.0, 1.0, 1.0, -0.9].into();
        let proxy = ProxySpec::new(&env, &[0, 1, 2], s.clone()).unwrap();
        let r = robot(RobotKind::Adversarial { epsilon: 0.01 }, 0.1);
        assert_eq!(step_adversarial(&env, &proxy, 0.01, &s, &r).unwrap_err(), RobotError::Exhausted);
    }

    #[test]
    fn invalid_parameters() {
        assert!(RobotStep::new(RobotKind::FixedProxy, 0.0, 1.0).is_err());
        assert!(RobotStep::new(RobotKind::FixedProxy, 1e-3, -1.0).is_err());
        assert!(RobotStep::new(RobotKind::Adversarial { epsilon: 0.0 }, 1e-3, 1.0).is_err());
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let env = contentrec();
        let s: StateVector = [6.0; 4].into();
        let proxy = ProxySpec::new(&env, &[0, 1], s.clone()).unwrap();
        let err = step_fixed_proxy(&env, &proxy, &s, &robot(RobotKind::FixedProxy, 1e-3)).unwrap_err();
        assert!(matches!(err, RobotError::Infeasible(_)));
    }
}
