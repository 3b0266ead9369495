#![allow(dead_code)]

use proptest::prelude::*;
use proxy_dynamics::{Environment, SeparableFunction, StateVector, TermSpec};

pub fn loglinear(bound: f64) -> Environment {
    let u = SeparableFunction::uniform(TermSpec::Log { scale: 1.0, shift: 1.0 }, 4, 0.0).unwrap();
    let c = SeparableFunction::uniform(TermSpec::Linear { weight: 1.0 }, 4, -4.0).unwrap();
    Environment::new(vec![bound; 4], u, c).unwrap()
}

pub fn contentrec() -> Environment {
    let u = SeparableFunction::uniform(TermSpec::Linear { weight: 1.0 }, 4, 0.0).unwrap();
    let c = SeparableFunction::uniform(TermSpec::Power { exponent: 2.0, weight: 1.0 }, 4, -100.0).unwrap();
    Environment::new(vec![0.0; 4], u, c).unwrap()
}

/// `U = s1 + tanh(s2)`, `C = s1 + s2 - 2`.
pub fn tanh_env(b2: f64) -> Environment {
    let u = SeparableFunction::new(vec![TermSpec::Linear { weight: 1.0 }, TermSpec::Tanh { weight: 1.0 }], 0.0).unwrap();
    let c = SeparableFunction::uniform(TermSpec::Linear { weight: 1.0 }, 2, -2.0).unwrap();
    Environment::new(vec![0.0, b2], u, c).unwrap()
}

pub fn arb_term() -> impl Strategy<Value = TermSpec> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|weight| TermSpec::Linear { weight }),
        (0.2..3.0f64, 0.5..3.0f64).prop_map(|(scale, shift)| TermSpec::Log { scale, shift }),
        (0.3..3.0f64, 0.2..3.0f64).prop_map(|(exponent, weight)| TermSpec::Power { exponent, weight }),
        (0.1..2.0f64, 0.2..3.0f64).prop_map(|(rate, weight)| TermSpec::NegExp { rate, weight }),
        (0.2..3.0f64).prop_map(|weight| TermSpec::Tanh { weight }),
    ]
}

/// Constraint terms that grow without bound, so the feasible set is compact.
pub fn arb_unbounded_term() -> impl Strategy<Value = TermSpec> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|weight| TermSpec::Linear { weight }),
        (1.0..3.0f64, 0.2..3.0f64).prop_map(|(exponent, weight)| TermSpec::Power { exponent, weight }),
    ]
}

/// Lower bound inside the term's domain, with some margin.
pub fn bound_for(terms: &[TermSpec], raw: f64) -> f64 {
    let edge = terms.iter().map(|t| t.domain().0).fold(f64::NEG_INFINITY, f64::max);
    if edge.is_finite() {
        edge + 0.1 + raw.abs()
    } else {
        raw
    }
}

/// Random environment with `2..=max_dim` attributes and budget `slack`
/// above `C(b) = 0`.
pub fn arb_env(max_dim: usize) -> impl Strategy<Value = Environment> {
    (2..=max_dim)
        .prop_flat_map(|dim| {
            (
                prop::collection::vec(arb_term(), dim),
                prop::collection::vec(arb_unbounded_term(), dim),
                prop::collection::vec(-2.0..2.0f64, dim),
                0.5..5.0f64,
            )
        })
        .prop_map(|(u, c, raw, slack)| {
            let bounds: Vec<f64> = (0..u.len()).map(|i| bound_for(&[u[i], c[i]], raw[i])).collect();
            let c_at_b: f64 = c.iter().zip(&bounds).map(|(t, &b)| t.value_unchecked(b)).sum();
            let utility = SeparableFunction::new(u, 0.0).unwrap();
            let constraint = SeparableFunction::new(c, -c_at_b - slack).unwrap();
            Environment::new(bounds, utility, constraint).unwrap()
        })
}

/// Point `b + t * w` with `t` a fraction `frac` of the largest feasible
/// multiple; `frac = 1` lands on the constraint surface.
pub fn feasible_point(env: &Environment, w: &[f64], frac: f64) -> StateVector {
    let b = env.bounds();
    let at = |t: f64| StateVector((0..env.dim()).map(|i| b[i] + t * w[i]).collect());
    let fits = |t: f64| env.eval_constraint(&at(t)).unwrap() <= 0.0;
    let mut hi = 1.0;
    while fits(hi) && hi < 1e6 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo * frac)
}

/// Environment plus a feasible state.
pub fn arb_env_state(max_dim: usize) -> impl Strategy<Value = (Environment, StateVector)> {
    arb_env(max_dim).prop_flat_map(|env| {
        let dim = env.dim();
        (Just(env), prop::collection::vec(0.05..1.0f64, dim), prop_oneof![0.0..1.0f64, Just(1.0)])
            .prop_map(|(env, w, frac)| {
                let s = feasible_point(&env, &w, frac);
                (env, s)
            })
    })
}

pub fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}
