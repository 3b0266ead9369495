mod common;

use common::*;
use proptest::prelude::*;
use proxy_dynamics::principal::{directive_most_least, Observation, DEFAULT_TOL_GAP};
use proxy_dynamics::robots::Stepper;
use proxy_dynamics::sim::{run_simulation, Event, MAX_SAMPLES};
use proxy_dynamics::{PolicyKind, ProxySpec, RobotKind, RobotStep, SimConfig, StateVector, Termination};

fn one_shot(kind: RobotKind, proxy: Vec<usize>, s0: StateVector, dt: f64, t_max: f64) -> SimConfig {
    SimConfig::one_shot(kind, proxy, s0, dt, t_max, 1.0)
}

#[test]
fn fixed_policy_matches_a_bare_stepper_loop() {
    for (env, s0, proxy) in [
        (loglinear(-0.9), StateVector::from([1.0; 4]), vec![0, 1]),
        (contentrec(), StateVector::from([1.0, 2.0, 6.0, 7.0]), vec![1, 3]),
    ] {
        let config = one_shot(RobotKind::FixedProxy, proxy.clone(), s0.clone(), 1e-2, 30.0);
        let traj = run_simulation(&env, &config).unwrap();

        let spec = ProxySpec::new(&env, &proxy, s0.clone()).unwrap();
        let mut stepper = Stepper::new(RobotStep::new(RobotKind::FixedProxy, 1e-2, 1.0).unwrap());
        let mut states = vec![s0];
        while states.len() <= 3000 {
            let out = stepper.step(&env, &spec, states.last().unwrap()).unwrap();
            if out.converged {
                break;
            }
            states.push(out.next_state);
        }
        assert_eq!(traj.samples.len(), states.len());
        for (sample, s) in traj.samples.iter().zip(&states) {
            assert!(sample.state.bit_eq(s), "t = {}", sample.t);
        }
    }
}

#[test]
fn off_is_absorbing() {
    let env = loglinear(-0.9);
    let mut config = one_shot(RobotKind::Adversarial { epsilon: 0.1 }, vec![0, 1], [1.0; 4].into(), 1e-3, 1.0);
    config.delta = 0.01;
    config.policy = PolicyKind::OffGuard { inner: Box::new(PolicyKind::Fixed { proxy: vec![0, 1] }), drop_tol: 0.0 };
    let traj = run_simulation(&env, &config).unwrap();
    assert_eq!(traj.termination, Termination::Off);
    let off = traj.samples.iter().position(|s| s.event == Event::Off).unwrap();
    assert_eq!(off, traj.samples.len() - 1);
    assert!((traj.last().t - 0.01).abs() < 1e-12);
    assert_eq!(traj.last().proxy_utility, None);
}

#[test]
fn efficient_top_j_improves_every_segment() {
    let env = contentrec();
    let mut config = one_shot(RobotKind::Efficient, vec![0, 1], [1.0, 2.0, 6.0, 7.0].into(), 1e-3, 300.0);
    config.max_rate = 0.1;
    config.delta = 0.1;
    config.tol_gap = 1e-3;
    config.policy = PolicyKind::TopJ { j: 2 };
    let traj = run_simulation(&env, &config).unwrap();
    assert_eq!(traj.termination, Termination::Off);
    assert!(!traj.segments.is_empty());
    for seg in &traj.segments {
        assert!(seg.u_end > seg.u_start, "round {}: {} -> {}", seg.round, seg.u_start, seg.u_end);
    }
    assert!(traj.last().utility > 16.0);
}

#[test]
fn most_least_stops_at_the_optimum() {
    let env = contentrec();
    let mut config = one_shot(RobotKind::FixedProxy, vec![0, 1], [1.0, 2.0, 6.0, 7.0].into(), 1e-2, 300.0);
    config.delta = 0.5;
    config.policy = PolicyKind::MostLeast;
    assert_eq!(config.effective_robot(), RobotKind::ImpactMin);
    let traj = run_simulation(&env, &config).unwrap();
    assert_eq!(traj.termination, Termination::Off);
    let s = traj.final_state();
    let spread = env.rank_by_sensitivity(s).unwrap().spread();
    assert!(spread < DEFAULT_TOL_GAP);
    assert!(env.eval_constraint(s).unwrap().abs() < env.tol_feas());
    // s* = (5, 5, 5, 5) by symmetry of max sum s subject to sum s^2 = 100
    assert!((traj.last().utility - 20.0).abs() < 1e-3);
    assert!(traj.utilities().collect::<Vec<_>>().windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn most_least_off_only_at_fixpoints((env, s) in arb_env_state(5)) {
        prop_assume!(env.j_max() >= 2);
        let obs = Observation { round: 0, initial: &s, current: &s, previous: None };
        if directive_most_least(&env, DEFAULT_TOL_GAP, &obs).unwrap().is_off() {
            prop_assert!(env.rank_by_sensitivity(&s).unwrap().spread() < DEFAULT_TOL_GAP);
            prop_assert!(env.eval_constraint(&s).unwrap().abs() < env.tol_feas());
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let env = contentrec();
    let mut config = one_shot(RobotKind::Efficient, vec![0, 1], [1.0, 2.0, 6.0, 7.0].into(), 1e-2, 20.0);
    config.delta = 0.5;
    config.policy = PolicyKind::TopJ { j: 2 };
    let a = run_simulation(&env, &config).unwrap().to_csv_string();
    let b = run_simulation(&env, &config).unwrap().to_csv_string();
    assert_eq!(a, b);
}

#[test]
fn long_runs_are_thinned_but_keep_events() {
    let env = loglinear(-0.9);
    let mut config = one_shot(RobotKind::FixedProxy, vec![0, 1], [1.0; 4].into(), 1e-4, 30.0);
    config.delta = 5.0;
    let traj = run_simulation(&env, &config).unwrap();
    assert!(traj.samples.len() < MAX_SAMPLES);
    assert!(traj.samples.windows(2).all(|w| w[0].t < w[1].t));
    // one directive sample per interaction until convergence, plus the final state
    let directives = traj.samples.iter().filter(|s| s.event == Event::DirectiveChange).count();
    assert_eq!(directives, 1);
    assert_eq!(traj.last().event, Event::Converged);
    assert!(close(traj.final_state().as_slice(), &[2.9, 2.9, -0.9, -0.9], 1e-9));
}

#[test]
fn bounded_loss_environment_never_loses_more_than_one() {
    for b2 in [-10.0, -100.0] {
        let env = tanh_env(b2);
        let config = one_shot(RobotKind::FixedProxy, vec![0], [1.0, 1.0].into(), 1e-2, 100.0);
        let traj = run_simulation(&env, &config).unwrap();
        let u0 = traj.first().utility;
        assert!(traj.min_utility() >= u0 - 1.0 - 1e-6);
        assert!(traj.last().utility > u0);
    }
}
