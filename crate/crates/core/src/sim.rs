//! The interaction protocol.
//!
//! Every `delta` time units the principal observes the state and issues a
//! directive. Between interactions the robot integrates its rate function in
//! substeps of `dt`. A fixed policy reduces this to the one-shot model.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::format::g12;
use crate::model::{Environment, ModelError, ProxySpec, StateVector};
use crate::principal::{Directive, Observation, PolicyKind, PrincipalPolicy};
use crate::robots::{RobotError, RobotKind, RobotStep, Stepper, DEFAULT_TOL_CONV};

/// Samples kept at full resolution before the trajectory is thinned by 10.
pub const MAX_SAMPLES: usize = 100_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("initial state is not feasible: {0}")]
    InfeasibleStart(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Robot(#[from] RobotError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Interaction interval.
    pub delta: f64,
    /// Integration substep; `delta` must be an integer multiple of it.
    pub dt: f64,
    pub t_max: f64,
    /// Cap on the norm of the robot's rate function.
    pub max_rate: f64,
    pub tol_conv: f64,
    pub tol_gap: f64,
    pub robot: RobotKind,
    pub policy: PolicyKind,
    pub initial: StateVector,
}

impl SimConfig {
    /// One-shot run: a fixed proxy, one interaction spanning the horizon.
    pub fn one_shot(robot: RobotKind, proxy: Vec<usize>, initial: StateVector, dt: f64, t_max: f64, max_rate: f64) -> Self {
        Self {
            delta: t_max,
            dt,
            t_max,
            max_rate,
            tol_conv: DEFAULT_TOL_CONV,
            tol_gap: crate::principal::DEFAULT_TOL_GAP,
            robot,
            policy: PolicyKind::Fixed { proxy },
            initial,
        }
    }

    pub fn principal(&self) -> PrincipalPolicy {
        PrincipalPolicy::new(self.policy.clone(), self.delta).with_tol_gap(self.tol_gap)
    }

    /// Robot kind actually used, after the policy's override.
    pub fn effective_robot(&self) -> RobotKind {
        self.principal().required_robot().unwrap_or(self.robot)
    }

    /// Substeps per interaction.
    pub fn substeps(&self) -> Result<u64, SimError> {
        let ratio = self.delta / self.dt;
        let n = ratio.round();
        if n < 1.0 || (n * self.dt - self.delta).abs() > 1e-9 * self.delta {
            return Err(SimError::InvalidConfig(format!(
                "delta = {} must be an integer multiple of dt = {}",
                self.delta, self.dt
            )));
        }
        Ok(n as u64)
    }

    pub fn validate(&self, env: &Environment) -> Result<(), SimError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(positive(self.dt) && positive(self.delta) && positive(self.t_max)) {
            return Err(SimError::InvalidConfig("dt, delta and t_max must be positive".into()));
        }
        if !(self.dt <= self.delta && self.delta <= self.t_max) {
            return Err(SimError::InvalidConfig(format!(
                "need 0 < dt <= delta <= t_max, got dt = {}, delta = {}, t_max = {}",
                self.dt, self.delta, self.t_max
            )));
        }
        if !positive(self.max_rate) {
            return Err(SimError::InvalidConfig(format!("max_rate must be positive, got {}", self.max_rate)));
        }
        if !(self.tol_conv.is_finite() && self.tol_conv >= 0.0) {
            return Err(SimError::InvalidConfig(format!("tol_conv must be non-negative, got {}", self.tol_conv)));
        }
        self.substeps()?;
        self.principal().validate(env)?;
        RobotStep::new(self.effective_robot(), self.dt, self.max_rate)?;
        if self.initial.len() != env.dim() {
            return Err(ModelError::DimensionMismatch { expected: env.dim(), got: self.initial.len() }.into());
        }
        if !env.is_feasible(&self.initial)? {
            return Err(SimError::InfeasibleStart(format!(
                "C(s0) = {}, s0 = {:?}, b = {:?}",
                env.eval_constraint(&self.initial)?,
                self.initial.as_slice(),
                env.bounds()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    Step,
    DirectiveChange,
    Off,
    Converged,
    Stuck,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Event::Step => "step",
            Event::DirectiveChange => "directive_change",
            Event::Off => "off",
            Event::Converged => "converged",
            Event::Stuck => "stuck",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: StateVector,
    pub utility: f64,
    /// Proxy utility under the active proxy; `None` once switched off.
    pub proxy_utility: Option<f64>,
    /// Active proxy indices (zero-based).
    pub proxy_set: Option<Vec<usize>>,
    pub event: Event,
    step: u64,
}

/// Utility bookkeeping for one interaction interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub round: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub u_start: f64,
    pub u_end: f64,
    pub proxy: Vec<usize>,
}

impl Segment {
    pub fn delta_u(&self) -> f64 {
        self.u_end - self.u_start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    TMax,
    Off,
    Converged,
    Stuck(String),
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::TMax => "t_max",
            Termination::Off => "off",
            Termination::Converged => "converged",
            Termination::Stuck(_) => "stuck",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dim: usize,
    pub samples: Vec<Sample>,
    pub segments: Vec<Segment>,
    pub termination: Termination,
    stride: u64,
}

impl Trajectory {
    fn new(dim: usize) -> Self {
        Self { dim, samples: Vec::new(), segments: Vec::new(), termination: Termination::TMax, stride: 1 }
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn final_state(&self) -> &StateVector {
        &self.last().state
    }

    pub fn utilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.utility)
    }

    pub fn min_utility(&self) -> f64 {
        self.utilities().fold(f64::INFINITY, f64::min)
    }

    /// Appends or, when the step is already recorded, re-labels the last sample.
    fn record(&mut self, sample: Sample) {
        if let Some(last) = self.samples.last_mut() {
            if last.step == sample.step {
                *last = sample;
                return;
            }
        }
        if sample.event == Event::Step && !sample.step.is_multiple_of(self.stride) {
            return;
        }
        self.samples.push(sample);
        if self.samples.len() >= MAX_SAMPLES {
            self.stride *= 10;
            let stride = self.stride;
            let last = self.samples.len() - 1;
            let mut i = 0;
            self.samples.retain(|s| {
                let keep = i == 0 || i == last || s.event != Event::Step || s.step % stride == 0;
                i += 1;
                keep
            });
        }
    }

    /// Writes `t, s_1..s_L, U, proxy_U, proxy_set, event` with `%.12g` numbers.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("s_{i}")));
        header.extend(["U", "proxy_U", "proxy_set", "event"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = vec![g12(s.t)];
            row.extend(s.state.iter().map(|&x| g12(x)));
            row.push(g12(s.utility));
            row.push(s.proxy_utility.map(g12).unwrap_or_default());
            row.push(
                s.proxy_set
                    .as_ref()
                    .map(|p| p.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default(),
            );
            row.push(s.event.to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

struct Recorder<'a> {
    env: &'a Environment,
    dt: f64,
    traj: Trajectory,
}

impl Recorder<'_> {
    fn sample(&mut self, step: u64, state: &StateVector, proxy: Option<&ProxySpec>, event: Event) -> Result<(), ModelError> {
        let sample = Sample {
            t: step as f64 * self.dt,
            state: state.clone(),
            utility: self.env.eval_utility(state)?,
            proxy_utility: proxy.map(|p| p.value(self.env, state)).transpose()?,
            proxy_set: proxy.map(|p| p.indices().to_vec()),
            event,
            step,
        };
        self.traj.record(sample);
        Ok(())
    }

    /// Changes the event of the sample at `step`, keeping its proxy columns.
    fn relabel(&mut self, step: u64, state: &StateVector, event: Event) -> Result<(), ModelError> {
        match self.traj.samples.last() {
            Some(last) if last.step == step => {
                let mut s = last.clone();
                s.event = event;
                self.traj.record(s);
                Ok(())
            }
            _ => {
                let proxy_set = self.traj.samples.last().and_then(|s| s.proxy_set.clone());
                let sample = Sample {
                    t: step as f64 * self.dt,
                    state: state.clone(),
                    utility: self.env.eval_utility(state)?,
                    proxy_utility: None,
                    proxy_set,
                    event,
                    step,
                };
                self.traj.record(sample);
                Ok(())
            }
        }
    }
}

/// Runs the interaction protocol until `t_max`, `Off`, convergence, or a stuck step.
///
/// Convergence means the robot reached a fixpoint of its current proxy and
/// the next directive is identical, so nothing can change any more. A robot
/// that converges under an adaptive policy idles until the next interaction.
pub fn run_simulation(env: &Environment, config: &SimConfig) -> Result<Trajectory, SimError> {
    config.validate(env)?;
    let n_sub = config.substeps()?;
    let total_steps = (config.t_max / config.dt * (1.0 + 1e-12)).floor() as u64;
    let policy = config.principal();
    let robot = RobotStep::new(config.effective_robot(), config.dt, config.max_rate)?.with_tol_conv(config.tol_conv);
    let mut stepper = Stepper::new(robot);

    let mut rec = Recorder { env, dt: config.dt, traj: Trajectory::new(env.dim()) };
    let s0 = config.initial.clone();
    let mut state = s0.clone();
    let mut step: u64 = 0;
    let mut round = 0usize;
    let mut previous: Option<StateVector> = None;
    let mut last_directive: Option<Directive> = None;
    let mut open: Option<Segment> = None;
    let mut idle = false;

    let termination = 'protocol: loop {
        let t = step as f64 * config.dt;
        if let Some(mut seg) = open.take() {
            seg.t_end = t;
            seg.u_end = env.eval_utility(&state)?;
            rec.traj.segments.push(seg);
        }
        if step >= total_steps && step > 0 {
            break if idle { Termination::Converged } else { Termination::TMax };
        }
        let obs = Observation { round, initial: &s0, current: &state, previous: previous.as_ref() };
        let directive = policy.directive(env, &obs)?;
        let proxy = match &directive {
            Directive::Off => {
                rec.sample(step, &state, None, Event::Off)?;
                break Termination::Off;
            }
            Directive::Proxy(p) => p.clone(),
        };
        let unchanged = last_directive.as_ref() == Some(&directive);
        if unchanged && idle {
            break Termination::Converged;
        }
        if !unchanged {
            stepper.reset();
        }
        let event = if unchanged && step > 0 { Event::Step } else { Event::DirectiveChange };
        rec.sample(step, &state, Some(&proxy), event)?;
        idle = false;
        previous = Some(state.clone());
        let u_start = env.eval_utility(&state)?;
        open = Some(Segment {
            round,
            t_start: t,
            t_end: t,
            u_start,
            u_end: u_start,
            proxy: proxy.indices().to_vec(),
        });
        last_directive = Some(directive);

        let boundary = (round as u64 + 1) * n_sub;
        while step < boundary {
            if step >= total_steps {
                break;
            }
            match stepper.step(env, &proxy, &state) {
                Ok(out) if out.converged => {
                    idle = true;
                    rec.relabel(step, &state, Event::Converged)?;
                    step = boundary.min(total_steps.max(step));
                    break;
                }
                Ok(out) => {
                    state = out.next_state;
                    step += 1;
                    rec.sample(step, &state, Some(&proxy), Event::Step)?;
                }
                Err(RobotError::Exhausted) => {
                    idle = true;
                    rec.relabel(step, &state, Event::Converged)?;
                    step = boundary.min(total_steps.max(step));
                    break;
                }
                Err(e) => {
                    rec.relabel(step, &state, Event::Stuck)?;
                    if let Some(mut seg) = open.take() {
                        seg.t_end = step as f64 * config.dt;
                        seg.u_end = env.eval_utility(&state)?;
                        rec.traj.segments.push(seg);
                    }
                    break 'protocol Termination::Stuck(e.to_string());
                }
            }
        }
        round += 1;
    };

    // make sure the final state is on record
    if rec.traj.last().state != state {
        rec.sample(step, &state, last_directive.as_ref().and_then(|d| d.proxy()), Event::Step)?;
    }
    rec.traj.termination = termination;
    Ok(rec.traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::loglinear;

    #[test]
    fn rejects_bad_configs() {
        let env = loglinear(-0.9);
        let base = SimConfig::one_shot(RobotKind::FixedProxy, vec![0, 1], [1.0; 4].into(), 1e-3, 1.0, 1.0);
        let mut c = base.clone();
        c.delta = 0.0015;
        assert!(matches!(run_simulation(&env, &c), Err(SimError::InvalidConfig(_))));
        let mut c = base.clone();
        c.dt = 2.0;
        assert!(run_simulation(&env, &c).is_err());
        let mut c = base.clone();
        c.initial = [2.0; 4].into();
        assert!(matches!(run_simulation(&env, &c), Err(SimError::InfeasibleStart(_))));
        let mut c = base;
        c.policy = PolicyKind::Fixed { proxy: vec![0, 1, 2, 3] };
        assert!(run_simulation(&env, &c).is_err());
    }

    #[test]
    fn first_sample_and_monotone_time() {
        let env = loglinear(-0.9);
        let c = SimConfig::one_shot(RobotKind::FixedProxy, vec![0, 1], [1.0; 4].into(), 1e-2, 5.0, 1.0);
        let traj = run_simulation(&env, &c).unwrap();
        assert_eq!(traj.first().t, 0.0);
        assert_eq!(traj.first().state, c.initial);
        assert_eq!(traj.first().event, Event::DirectiveChange);
        assert!(traj.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(traj.samples.len(), 501);
        assert_eq!(traj.termination, Termination::TMax);
    }

    #[test]
    fn decimation_bounds_memory() {
        let mut traj = Trajectory::new(1);
        for step in 0..250_000u64 {
            traj.record(Sample {
                t: step as f64,
                state: [0.0].into(),
                utility: 0.0,
                proxy_utility: None,
                proxy_set: None,
                event: if step == 12_345 { Event::DirectiveChange } else { Event::Step },
                step,
            });
        }
        assert!(traj.samples.len() < MAX_SAMPLES);
        assert!(traj.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert!(traj.samples.iter().any(|s| s.step == 12_345));
        assert_eq!(traj.samples[0].step, 0);
    }

    #[test]
    fn csv_header() {
        let env = loglinear(-0.9);
        let c = SimConfig::one_shot(RobotKind::FixedProxy, vec![0, 1], [1.0; 4].into(), 0.5, 1.0, 1.0);
        let csv = run_simulation(&env, &c).unwrap().to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,s_1,s_2,s_3,s_4,U,proxy_U,proxy_set,event");
        let first = lines.next().unwrap();
        assert_eq!(first, "0,1,1,1,1,2.77258872224,2.77258872224,1;2,directive_change");
    }
}
