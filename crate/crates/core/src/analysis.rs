//! Oracles and checks that sit outside the simulator: brute-force optima,
//! proxy suprema, overoptimization detection, the sufficient-condition rule
//! table, and parameter sweeps.
//!
//! The oracles never call into the robots' ascent code, so they can be used
//! to judge it.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::g12;
use crate::model::{Environment, ModelError, ProxySpec, StateVector, TermSpec};
use crate::principal::PolicyKind;
use crate::sim::{run_simulation, SimConfig, SimError, Termination, Trajectory};

const GOLDEN_ITERS: usize = 80;
const BISECT_ITERS: usize = 200;
const MAX_SWEEPS: usize = 400;
const MAX_DOUBLINGS: usize = 200;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("feasible set is empty")]
    EmptyFeasibleSet,
    #[error("feasible set is unbounded along attribute {index}; the oracle needs a compact box")]
    UnboundedFeasibleSet { index: usize },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Grid resolution giving roughly 2e5 grid points, clamped to [3, 101] per axis.
pub fn default_resolution(dim: usize) -> usize {
    if dim <= 1 {
        return 101;
    }
    let r = 200_000f64.powf(1.0 / (dim - 1) as f64).floor() as usize;
    r.clamp(3, 101)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub state: StateVector,
    pub value: f64,
    /// Spread of sensitivities over attributes strictly above their bounds.
    /// Near zero at an interior first-order point with an active constraint.
    pub kkt_spread: Option<f64>,
}

/// Best-effort global maximum of `U` over the feasible set.
pub fn optimal_state_oracle(env: &Environment, resolution: usize) -> Result<OracleResult, AnalysisError> {
    let base = StateVector(env.bounds().to_vec());
    let free: Vec<usize> = (0..env.dim()).collect();
    let state = BoxSearch::new(env, base, free)?.maximize(resolution)?;
    let value = env.eval_utility(&state)?;
    let kkt_spread = kkt_spread(env, &state)?;
    Ok(OracleResult { state, value, kkt_spread })
}

/// Maximizer of the proxy utility with unmentioned attributes pinned to
/// their lower bounds.
pub fn proxy_sup_oracle(env: &Environment, proxy: &ProxySpec, resolution: usize) -> Result<StateVector, AnalysisError> {
    let base = StateVector(env.bounds().to_vec());
    BoxSearch::new(env, base, proxy.indices().to_vec())?.maximize(resolution)
}

fn kkt_spread(env: &Environment, s: &StateVector) -> Result<Option<f64>, ModelError> {
    let bounds = env.bounds();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &x) in s.iter().enumerate() {
        if x > bounds[i] + 1e-6 {
            let c = env.constraint().terms[i].derivative_unchecked(x);
            if c.abs() < 1e-12 {
                continue;
            }
            let v = env.utility().terms[i].derivative_unchecked(x) / c;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok(if lo.is_finite() { Some(hi - lo) } else { None })
}

/// Maximizes the sum of the free attributes' utility terms over
/// `{C <= 0, s >= b}`, non-free attributes held at `base`.
///
/// Utility and constraint terms are increasing, so the optimum can be
/// searched over the first `n - 1` free attributes with the last one set as
/// high as the constraint allows.
struct BoxSearch<'a> {
    env: &'a Environment,
    base: StateVector,
    free: Vec<usize>,
    hi: Vec<f64>,
}

impl<'a> BoxSearch<'a> {
    fn new(env: &'a Environment, base: StateVector, free: Vec<usize>) -> Result<Self, AnalysisError> {
        if free.is_empty() {
            return Err(AnalysisError::InvalidSweep("no free attributes to optimize".into()));
        }
        if env.eval_constraint(&base)? > env.tol_feas() {
            return Err(AnalysisError::EmptyFeasibleSet);
        }
        let mut search = Self { env, base, free, hi: Vec::new() };
        search.hi = search.free.iter().map(|&i| search.axis_max(i)).collect::<Result<_, _>>()?;
        Ok(search)
    }

    /// Largest value of attribute `i` with all others at the base state.
    fn axis_max(&self, i: usize) -> Result<f64, AnalysisError> {
        let term = &self.env.constraint().terms[i];
        let b = self.base[i];
        let budget = -self.env.eval_constraint(&self.base)? + term.value_unchecked(b);
        let fits = |x: f64| term.value_unchecked(x) <= budget;
        let mut step = b.abs().max(1.0);
        let mut hi = b + step;
        let mut n = 0;
        while fits(hi) {
            step *= 2.0;
            hi = b + step;
            n += 1;
            if n > MAX_DOUBLINGS || !hi.is_finite() {
                return Err(AnalysisError::UnboundedFeasibleSet { index: i });
            }
        }
        Ok(bisect_max(fits, b, hi))
    }

    /// Sets the last free attribute as high as the budget allows; `false` if
    /// the other attributes already overspend.
    fn complete(&self, s: &mut StateVector) -> Result<bool, ModelError> {
        let last = *self.free.last().expect("non-empty");
        let term = &self.env.constraint().terms[last];
        let b = self.env.bounds()[last];
        s[last] = b;
        let budget = -self.env.eval_constraint(s)? + term.value_unchecked(b);
        if budget < term.value_unchecked(b) - self.env.tol_feas() {
            return Ok(false);
        }
        let hi = self.hi[self.free.len() - 1];
        s[last] = bisect_max(|x| term.value_unchecked(x) <= budget, b, hi);
        Ok(true)
    }

    fn objective(&self, s: &StateVector) -> f64 {
        self.free.iter().map(|&i| self.env.utility().terms[i].value_unchecked(s[i])).sum()
    }

    /// Objective with attribute `i` of `s` replaced by `x` and the last free
    /// attribute completed; `-inf` when infeasible.
    fn probe(&self, s: &StateVector, i: usize, x: f64) -> Result<(f64, StateVector), ModelError> {
        let mut t = s.clone();
        t[i] = x;
        if self.complete(&mut t)? {
            Ok((self.objective(&t), t))
        } else {
            Ok((f64::NEG_INFINITY, t))
        }
    }

    fn maximize(&self, resolution: usize) -> Result<StateVector, AnalysisError> {
        let grid_axes = &self.free[..self.free.len() - 1];
        let res = resolution.max(2);
        let bounds = self.env.bounds();

        let mut best: Option<(f64, StateVector)> = None;
        let mut idx = vec![0usize; grid_axes.len()];
        loop {
            let mut s = self.base.clone();
            for (a, &i) in grid_axes.iter().enumerate() {
                let frac = idx[a] as f64 / (res - 1) as f64;
                s[i] = bounds[i] + frac * (self.hi[a] - bounds[i]);
            }
            if self.complete(&mut s)? {
                let v = self.objective(&s);
                if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, s));
                }
            }
            // odometer increment
            let mut a = 0;
            while a < idx.len() {
                idx[a] += 1;
                if idx[a] < res {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
            if a == idx.len() {
                break;
            }
        }
        let (mut value, mut s) = best.ok_or(AnalysisError::EmptyFeasibleSet)?;

        let mut width: Vec<f64> = grid_axes
            .iter()
            .enumerate()
            .map(|(a, &i)| (self.hi[a] - bounds[i]) / (res - 1) as f64)
            .collect();
        for _ in 0..MAX_SWEEPS {
            let mut moved = 0.0f64;
            for (a, &i) in grid_axes.iter().enumerate() {
                let lo = (s[i] - width[a]).max(bounds[i]);
                let hi = (s[i] + width[a]).min(self.hi[a]);
                let x = self.golden(&s, i, lo, hi)?;
                let (v, t) = self.probe(&s, i, x)?;
                let step = (x - s[i]).abs();
                if v > value {
                    value = v;
                    s = t;
                    moved = moved.max(step);
                    width[a] = (2.0 * step).max(0.5 * width[a]);
                } else {
                    width[a] *= 0.5;
                }
            }
            if moved == 0.0 && width.iter().all(|&w| w < 1e-13) {
                break;
            }
        }
        Ok(s)
    }

    fn golden(&self, s: &StateVector, i: usize, mut a: f64, mut b: f64) -> Result<f64, ModelError> {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = self.probe(s, i, c)?.0;
        let mut fd = self.probe(s, i, d)?.0;
        for _ in 0..GOLDEN_ITERS {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = self.probe(s, i, c)?.0;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = self.probe(s, i, d)?.0;
            }
        }
        // the bracket ends are candidates too: optima often sit on a bound
        let mut best = (self.probe(s, i, 0.5 * (a + b))?.0, 0.5 * (a + b));
        for x in [a, b] {
            let v = self.probe(s, i, x)?.0;
            if v > best.0 {
                best = (v, x);
            }
        }
        Ok(best.1)
    }
}

/// Largest `x` in `[lo, hi]` with `fits(x)`, given `fits(lo)` and monotonicity.
fn bisect_max(fits: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64) -> f64 {
    if fits(hi) {
        return hi;
    }
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OveroptimizationReport {
    /// First sample time with `U < u_ref`.
    pub crossing_time: Option<f64>,
    pub min_utility: f64,
    /// `U < u_ref` at every sample from the crossing on.
    pub stayed_below: bool,
}

impl OveroptimizationReport {
    /// From `(t, U)` pairs in time order.
    pub fn from_series(series: &[(f64, f64)], u_ref: f64) -> Self {
        let min_utility = series.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let first = series.iter().position(|&(_, u)| u < u_ref);
        let stayed_below = match first {
            Some(k) => series[k..].iter().all(|&(_, u)| u < u_ref),
            None => false,
        };
        Self { crossing_time: first.map(|k| series[k].0), min_utility, stayed_below }
    }
}

pub fn detect_overoptimization(traj: &Trajectory, u_ref: f64) -> OveroptimizationReport {
    let series: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.t, s.utility)).collect();
    OveroptimizationReport::from_series(&series, u_ref)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// A missing rule makes the whole verdict inconclusive; otherwise any
    /// failure fails.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            (Fail, _) | (_, Fail) => Fail,
            _ => Pass,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeConditions {
    /// One-based attribute index.
    pub attribute: usize,
    /// Sensitivity non-increasing and tending to zero.
    pub diminishing: Verdict,
    pub diminishing_reason: String,
    /// Additive separability; structural for the term catalog.
    pub separable: Verdict,
    /// Constraint slope bounded below by some positive eta.
    pub slope: Verdict,
    pub slope_reason: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl AttributeConditions {
    pub fn verdict(&self) -> Verdict {
        self.diminishing.combine(self.separable).combine(self.slope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub overall: Verdict,
    pub attributes: Vec<AttributeConditions>,
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "overall: {}", self.overall)?;
        for a in &self.attributes {
            write!(
                f,
                "  s_{}: diminishing={} ({}), separable={}, slope={} ({})",
                a.attribute, a.diminishing, a.diminishing_reason, a.separable, a.slope, a.slope_reason
            )?;
            if let Some(eta) = a.eta {
                write!(f, ", eta={}", g12(eta))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Checks the sufficient conditions for unmentioned-attribute overoptimization
/// attribute by attribute, from a rule table over term pairings. Pairings
/// without a rule are inconclusive.
pub fn check_prop_conditions(env: &Environment) -> ConditionReport {
    let bounds = env.bounds();
    let attributes: Vec<AttributeConditions> = (0..env.dim())
        .map(|i| {
            let u = &env.utility().terms[i];
            let c = &env.constraint().terms[i];
            let b = bounds[i];
            let (mut diminishing, mut diminishing_reason) = diminishing_rule(u, c, b);
            if diminishing == Verdict::Pass {
                if let Some(x) = spot_check_increase(env, i) {
                    diminishing = Verdict::Inconclusive;
                    diminishing_reason = format!("rule says non-increasing but sensitivity rises near s = {}", g12(x));
                }
            }
            let (slope, slope_reason, eta) = slope_rule(c, b);
            AttributeConditions {
                attribute: i + 1,
                diminishing,
                diminishing_reason,
                separable: Verdict::Pass,
                slope,
                slope_reason,
                eta,
            }
        })
        .collect();
    let overall = attributes.iter().fold(Verdict::Pass, |acc, a| acc.combine(a.verdict()));
    ConditionReport { overall, attributes }
}

fn diminishing_rule(u: &TermSpec, c: &TermSpec, b: f64) -> (Verdict, String) {
    use TermSpec::*;
    use Verdict::*;
    let pass = |why: &str| (Pass, why.to_string());
    let fail = |why: &str| (Fail, why.to_string());
    let unknown = || (Inconclusive, format!("no rule for {u} over {c}"));
    // p = 1 power terms behave like linear ones
    let c_power = match c {
        Linear { .. } => Some(1.0),
        Power { exponent, .. } => Some(*exponent),
        _ => None,
    };
    match (u, c_power) {
        (Log { .. }, Some(p)) if p >= 1.0 => pass("log over non-decreasing slope: 1/(s+shift) decays"),
        (Log { .. }, None) => fail("constraint slope decays at least as fast as the utility slope"),
        (Linear { .. }, Some(p)) if p > 1.0 => pass("constant over growing slope decays"),
        (Linear { .. }, Some(_)) => fail("sensitivity does not tend to zero"),
        (Linear { .. }, None) => fail("sensitivity grows as the constraint slope decays"),
        (Power { exponent: q, .. }, Some(p)) => {
            if *q < p {
                pass("s^(q-p) with q < p decays")
            } else {
                fail("s^(q-p) with q >= p does not decay")
            }
        }
        (NegExp { .. }, Some(p)) if p >= 1.0 => pass("exponential decay over non-decreasing slope"),
        (NegExp { rate: ru, .. }, None) => match c {
            NegExp { rate: rc, .. } if ru > rc => pass("exponential decay outpaces the constraint's"),
            NegExp { .. } => fail("constraint slope decays at least as fast"),
            _ => unknown(),
        },
        (Tanh { .. }, Some(p)) if p >= 1.0 => {
            if b >= 0.0 {
                pass("sech^2 decreasing on s >= 0")
            } else {
                fail("sech^2 increases below zero and the bound allows s < 0")
            }
        }
        _ => unknown(),
    }
}

fn slope_rule(c: &TermSpec, b: f64) -> (Verdict, String, Option<f64>) {
    use TermSpec::*;
    match c {
        Linear { weight } => (Verdict::Pass, "constant slope".into(), Some(*weight)),
        Power { exponent, weight } if *exponent == 1.0 => (Verdict::Pass, "constant slope".into(), Some(*weight)),
        Power { exponent, weight } if *exponent > 1.0 => {
            if b > 0.0 {
                let eta = weight * exponent * b.powf(exponent - 1.0);
                (Verdict::Pass, "slope minimal at the lower bound".into(), Some(eta))
            } else {
                (Verdict::Fail, "slope vanishes at s = 0".into(), None)
            }
        }
        Power { .. } => (Verdict::Fail, "slope decays to zero as s grows".into(), None),
        Log { .. } | NegExp { .. } | Tanh { .. } => (Verdict::Fail, "slope decays to zero as s grows".into(), None),
    }
}

/// Samples the sensitivity at 10 increasing points; returns where it rises.
fn spot_check_increase(env: &Environment, i: usize) -> Option<f64> {
    let b = env.bounds()[i];
    let span = BoxSearch::new(env, StateVector(env.bounds().to_vec()), vec![i])
        .ok()
        .map(|s| s.hi[0] - b)
        .filter(|w| w.is_finite() && *w > 0.0)
        .unwrap_or(10.0);
    let u = &env.utility().terms[i];
    let c = &env.constraint().terms[i];
    let mut prev: Option<f64> = None;
    for k in 1..=10 {
        let x = b + span * k as f64 / 11.0;
        let slope = c.derivative_unchecked(x);
        if slope.abs() < 1e-12 {
            continue;
        }
        let v = u.derivative_unchecked(x) / slope;
        if let Some(p) = prev {
            if v > p * (1.0 + 1e-12) + 1e-300 {
                return Some(x);
            }
        }
        prev = Some(v);
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub min_u: f64,
    pub final_u: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossing_time: Option<f64>,
    /// Minimum utility over the last 10% of samples.
    pub tail_min_u: f64,
    /// `U(s0) - final U`.
    pub loss: f64,
    pub status: String,
}

impl SweepRow {
    fn failed(value: f64, why: impl fmt::Display) -> Self {
        Self {
            value,
            min_u: f64::NAN,
            final_u: f64::NAN,
            crossing_time: None,
            tail_min_u: f64::NAN,
            loss: f64::NAN,
            status: format!("failed: {why}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        !self.status.starts_with("failed") && self.status != "stuck"
    }

    fn from_run(value: f64, env: &Environment, traj: &Trajectory) -> Result<Self, ModelError> {
        let u0 = env.eval_utility(&traj.first().state)?;
        let report = detect_overoptimization(traj, u0);
        let n = traj.samples.len();
        let tail = &traj.samples[n - (n / 10).max(1)..];
        let final_u = traj.last().utility;
        Ok(Self {
            value,
            min_u: report.min_utility,
            final_u,
            crossing_time: report.crossing_time,
            tail_min_u: tail.iter().map(|s| s.utility).fold(f64::INFINITY, f64::min),
            loss: u0 - final_u,
            status: match &traj.termination {
                Termination::Stuck(_) => "stuck".into(),
                t => t.name().into(),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UThreshold {
    pub u: f64,
    /// First swept value whose final utility is at most `u`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: String,
    pub rows: Vec<SweepRow>,
    /// Final utility strictly decreasing along the rows.
    pub strictly_decreasing: bool,
    pub thresholds: Vec<UThreshold>,
    /// Set when the environment fails the sufficient conditions, so the
    /// sweep illustrates rather than witnesses.
    pub advisory: bool,
}

impl SweepTable {
    fn new(parameter: &str, rows: Vec<SweepRow>, u_levels: &[f64], advisory: bool) -> Self {
        let finals: Vec<f64> = rows.iter().map(|r| r.final_u).collect();
        let strictly_decreasing = rows.iter().all(SweepRow::is_ok) && finals.windows(2).all(|w| w[1] < w[0]);
        let thresholds = u_levels
            .iter()
            .map(|&u| UThreshold {
                u,
                first_value: rows.iter().find(|r| r.is_ok() && r.final_u <= u).map(|r| r.value),
            })
            .collect();
        Self { parameter: parameter.to_string(), rows, strictly_decreasing, thresholds, advisory }
    }

    pub fn losses(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.loss).collect()
    }

    /// `value,min_u,final_u,crossing_time,tail_min_u,loss,status`
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "value,min_u,final_u,crossing_time,tail_min_u,loss,status")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                g12(r.value),
                g12(r.min_u),
                g12(r.final_u),
                r.crossing_time.map(g12).unwrap_or_default(),
                g12(r.tail_min_u),
                g12(r.loss),
                r.status.replace(',', ";")
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Evaluates `run` at every value in parallel; rows keep the input order.
pub fn parameter_sweep<F>(values: &[f64], run: F) -> Vec<SweepRow>
where
    F: Fn(f64) -> Result<SweepRow, AnalysisError> + Sync,
{
    values
        .par_iter()
        .map(|&v| run(v).unwrap_or_else(|e| SweepRow::failed(v, e)))
        .collect()
}

/// Lowers every unmentioned attribute's bound to each value in turn and runs
/// the fixed-proxy configuration.
pub fn u_costly_sweep(
    env: &Environment,
    config: &SimConfig,
    bound_values: &[f64],
    u_levels: &[f64],
) -> Result<SweepTable, AnalysisError> {
    let PolicyKind::Fixed { proxy } = &config.policy else {
        return Err(AnalysisError::InvalidSweep("bound sweeps need a fixed-proxy policy".into()));
    };
    if bound_values.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less)) {
        return Err(AnalysisError::InvalidSweep("bound values must be strictly decreasing".into()));
    }
    let unmentioned: Vec<usize> = (0..env.dim()).filter(|i| !proxy.contains(i)).collect();
    let advisory = check_prop_conditions(env).overall != Verdict::Pass;
    let rows = parameter_sweep(bound_values, |v| {
        let mut bounds = env.bounds().to_vec();
        for &k in &unmentioned {
            bounds[k] = v;
        }
        let env = env.with_bounds(bounds)?;
        let traj = run_simulation(&env, config)?;
        Ok(SweepRow::from_run(v, &env, &traj)?)
    });
    Ok(SweepTable::new("bounds.unmentioned", rows, u_levels, advisory))
}

/// Lowers one attribute's bound (zero-based `index`) to each value.
pub fn bound_sweep(
    env: &Environment,
    config: &SimConfig,
    index: usize,
    bound_values: &[f64],
    u_levels: &[f64],
) -> Result<SweepTable, AnalysisError> {
    if index >= env.dim() {
        return Err(AnalysisError::InvalidSweep(format!("attribute {} out of range", index + 1)));
    }
    if bound_values.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Less)) {
        return Err(AnalysisError::InvalidSweep("bound values must be strictly decreasing".into()));
    }
    let advisory = check_prop_conditions(env).overall != Verdict::Pass;
    let rows = parameter_sweep(bound_values, |v| {
        let mut bounds = env.bounds().to_vec();
        bounds[index] = v;
        let env = env.with_bounds(bounds)?;
        let traj = run_simulation(&env, config)?;
        Ok(SweepRow::from_run(v, &env, &traj)?)
    });
    Ok(SweepTable::new(&format!("bounds.{}", index + 1), rows, u_levels, advisory))
}

/// Reruns the configuration with each interaction interval. Values that are
/// not a multiple of `dt` use `dt = delta`.
pub fn delta_loss_sweep(env: &Environment, config: &SimConfig, deltas: &[f64]) -> Result<SweepTable, AnalysisError> {
    let rows = parameter_sweep(deltas, |delta| {
        let mut c = config.clone();
        c.delta = delta;
        if c.dt > delta || c.substeps().is_err() {
            c.dt = delta;
        }
        let traj = run_simulation(env, &c)?;
        Ok(SweepRow::from_run(delta, env, &traj)?)
    });
    Ok(SweepTable::new("delta", rows, &[], false))
}

/// Reruns the configuration with each rate cap.
pub fn max_rate_sweep(env: &Environment, config: &SimConfig, rates: &[f64]) -> Result<SweepTable, AnalysisError> {
    let rows = parameter_sweep(rates, |rate| {
        let mut c = config.clone();
        c.max_rate = rate;
        let traj = run_simulation(env, &c)?;
        Ok(SweepRow::from_run(rate, env, &traj)?)
    });
    Ok(SweepTable::new("max_rate", rows, &[], false))
}
