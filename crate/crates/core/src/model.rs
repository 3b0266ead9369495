//! Environments, states and proxies over an additively separable function catalog.
//!
//! Attribute indices are zero-based throughout the library. User-facing
//! formats (config files, CSV `proxy_set` columns) use one-based indices.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance for feasibility and bound comparisons.
pub const DEFAULT_TOL_FEAS: f64 = 1e-9;

/// Constraint-gradient components below this are treated as degenerate.
pub const MIN_CONSTRAINT_SLOPE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("attribute {index}: value {value} is outside the term domain (limit {limit})")]
    DomainViolation { index: usize, value: f64, limit: f64 },
    #[error("attribute {index}: constraint gradient {slope} is not positive")]
    DegenerateConstraintGradient { index: usize, slope: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid term: {0}")]
    InvalidTerm(String),
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid proxy: {0}")]
    InvalidProxy(String),
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),
}

/// One strictly increasing scalar term of a separable function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermSpec {
    /// `weight * s`
    Linear { weight: f64 },
    /// `scale * ln(s + shift)`, defined for `s > -shift`
    Log { scale: f64, shift: f64 },
    /// `weight * s^exponent`, defined for `s >= 0`
    Power { exponent: f64, weight: f64 },
    /// `weight * (1 - exp(-rate * s))`
    #[serde(rename = "negexp")]
    NegExp { rate: f64, weight: f64 },
    /// `weight * tanh(s)`
    Tanh { weight: f64 },
}

impl TermSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ModelError::InvalidTerm(format!("{self}: {name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            TermSpec::Linear { weight } | TermSpec::Tanh { weight } => positive("weight", weight),
            TermSpec::Log { scale, shift } => {
                positive("scale", scale)?;
                if shift.is_finite() {
                    Ok(())
                } else {
                    Err(ModelError::InvalidTerm(format!("{self}: shift must be finite")))
                }
            }
            TermSpec::Power { exponent, weight } => {
                positive("exponent", exponent)?;
                positive("weight", weight)
            }
            TermSpec::NegExp { rate, weight } => {
                positive("rate", rate)?;
                positive("weight", weight)
            }
        }
    }

    /// Lower limit of the domain and whether the limit itself is included.
    pub fn domain(&self) -> (f64, bool) {
        match *self {
            TermSpec::Log { shift, .. } => (-shift, false),
            TermSpec::Power { .. } => (0.0, true),
            _ => (f64::NEG_INFINITY, false),
        }
    }

    pub fn in_domain(&self, s: f64) -> bool {
        let (limit, inclusive) = self.domain();
        !s.is_nan() && (s > limit || (inclusive && s == limit))
    }

    fn check(&self, index: usize, s: f64) -> Result<(), ModelError> {
        if self.in_domain(s) {
            Ok(())
        } else {
            Err(ModelError::DomainViolation { index, value: s, limit: self.domain().0 })
        }
    }

    /// Term value; the caller guarantees `s` is in the domain.
    pub fn value_unchecked(&self, s: f64) -> f64 {
        match *self {
            TermSpec::Linear { weight } => weight * s,
            TermSpec::Log { scale, shift } => scale * (s + shift).ln(),
            TermSpec::Power { exponent, weight } => weight * s.powf(exponent),
            TermSpec::NegExp { rate, weight } => -weight * (-rate * s).exp_m1(),
            TermSpec::Tanh { weight } => weight * s.tanh(),
        }
    }

    /// Analytic derivative; the caller guarantees `s` is in the domain.
    pub fn derivative_unchecked(&self, s: f64) -> f64 {
        match *self {
            TermSpec::Linear { weight } => weight,
            TermSpec::Log { scale, shift } => scale / (s + shift),
            TermSpec::Power { exponent, weight } => {
                if exponent == 1.0 {
                    weight
                } else {
                    weight * exponent * s.powf(exponent - 1.0)
                }
            }
            TermSpec::NegExp { rate, weight } => weight * rate * (-rate * s).exp(),
            TermSpec::Tanh { weight } => {
                let c = s.cosh();
                weight / (c * c)
            }
        }
    }

    /// Multiplies the term's outer weight (or log scale) by `factor`.
    pub fn scaled(&self, factor: f64) -> TermSpec {
        match *self {
            TermSpec::Linear { weight } => TermSpec::Linear { weight: weight * factor },
            TermSpec::Log { scale, shift } => TermSpec::Log { scale: scale * factor, shift },
            TermSpec::Power { exponent, weight } => TermSpec::Power { exponent, weight: weight * factor },
            TermSpec::NegExp { rate, weight } => TermSpec::NegExp { rate, weight: weight * factor },
            TermSpec::Tanh { weight } => TermSpec::Tanh { weight: weight * factor },
        }
    }
}

impl fmt::Display for TermSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TermSpec::Linear { weight } => write!(f, "linear(weight={weight})"),
            TermSpec::Log { scale, shift } => write!(f, "log(scale={scale}, shift={shift})"),
            TermSpec::Power { exponent, weight } => write!(f, "power(exponent={exponent}, weight={weight})"),
            TermSpec::NegExp { rate, weight } => write!(f, "negexp(rate={rate}, weight={weight})"),
            TermSpec::Tanh { weight } => write!(f, "tanh(weight={weight})"),
        }
    }
}

/// `offset + sum_i term_i(s_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableFunction {
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub offset: f64,
}

impl SeparableFunction {
    pub fn new(terms: Vec<TermSpec>, offset: f64) -> Result<Self, ModelError> {
        for t in &terms {
            t.validate()?;
        }
        if !offset.is_finite() {
            return Err(ModelError::InvalidTerm(format!("offset must be finite, got {offset}")));
        }
        Ok(Self { terms, offset })
    }

    /// The same term repeated `dim` times.
    pub fn uniform(term: TermSpec, dim: usize, offset: f64) -> Result<Self, ModelError> {
        Self::new(vec![term; dim], offset)
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    fn check_dim(&self, got: usize) -> Result<(), ModelError> {
        if got == self.terms.len() {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch { expected: self.terms.len(), got })
        }
    }

    pub fn eval(&self, s: &StateVector) -> Result<f64, ModelError> {
        self.check_dim(s.len())?;
        let mut total = self.offset;
        for (i, (t, &x)) in self.terms.iter().zip(s.iter()).enumerate() {
            t.check(i, x)?;
            total += t.value_unchecked(x);
        }
        Ok(total)
    }

    pub fn grad(&self, s: &StateVector) -> Result<Vec<f64>, ModelError> {
        self.check_dim(s.len())?;
        self.terms
            .iter()
            .zip(s.iter())
            .enumerate()
            .map(|(i, (t, &x))| {
                t.check(i, x)?;
                Ok(t.derivative_unchecked(x))
            })
            .collect()
    }

    /// Central differences `(f(s + h e_i) - f(s - h e_i)) / 2h` built only from [`eval`](Self::eval).
    pub fn finite_diff_grad(&self, s: &StateVector, h: f64) -> Result<Vec<f64>, ModelError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(ModelError::InvalidStep(h));
        }
        self.check_dim(s.len())?;
        let mut out = Vec::with_capacity(s.len());
        for i in 0..s.len() {
            let mut plus = s.clone();
            plus[i] += h;
            let mut minus = s.clone();
            minus[i] -= h;
            out.push((self.eval(&plus)? - self.eval(&minus)?) / (2.0 * h));
        }
        Ok(out)
    }

    /// Multiplies every term weight by `factor`, leaving the offset alone.
    pub fn scaled(&self, factor: f64) -> SeparableFunction {
        SeparableFunction {
            terms: self.terms.iter().map(|t| t.scaled(factor)).collect(),
            offset: self.offset,
        }
    }
}

/// A point in attribute space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Bitwise equality, treating `-0.0` and `0.0` as different.
    pub fn bit_eq(&self, other: &StateVector) -> bool {
        self.len() == other.len() && self.iter().zip(other.iter()).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for StateVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[f64; N]> for StateVector {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

/// Utility, constraint and lower bounds. Feasible set is `{s : C(s) <= 0, s >= b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    bounds: Vec<f64>,
    utility: SeparableFunction,
    constraint: SeparableFunction,
    j_max: usize,
    tol_feas: f64,
}

impl Environment {
    /// Builds an environment with `J_max = L - 1` and the default feasibility tolerance.
    pub fn new(bounds: Vec<f64>, utility: SeparableFunction, constraint: SeparableFunction) -> Result<Self, ModelError> {
        let j_max = bounds.len().saturating_sub(1);
        Self::with_options(bounds, utility, constraint, j_max, DEFAULT_TOL_FEAS)
    }

    pub fn with_options(
        bounds: Vec<f64>,
        utility: SeparableFunction,
        constraint: SeparableFunction,
        j_max: usize,
        tol_feas: f64,
    ) -> Result<Self, ModelError> {
        let dim = bounds.len();
        if dim == 0 {
            return Err(ModelError::InvalidEnvironment("at least one attribute is required".into()));
        }
        for f in [&utility, &constraint] {
            f.check_dim(dim)?;
            for t in &f.terms {
                t.validate()?;
            }
        }
        if dim >= 2 && (j_max == 0 || j_max >= dim) {
            return Err(ModelError::InvalidEnvironment(format!(
                "J_max must satisfy 1 <= J_max < L (J < L), got J_max = {j_max} with L = {dim}"
            )));
        }
        if !(tol_feas.is_finite() && tol_feas >= 0.0) {
            return Err(ModelError::InvalidEnvironment(format!("tol_feas must be non-negative, got {tol_feas}")));
        }
        for (i, &b) in bounds.iter().enumerate() {
            if !b.is_finite() {
                return Err(ModelError::InvalidEnvironment(format!("bound b_{} must be finite", i + 1)));
            }
            for (which, f) in [("utility", &utility), ("constraint", &constraint)] {
                if !f.terms[i].in_domain(b) {
                    return Err(ModelError::InvalidEnvironment(format!(
                        "bound b_{} = {b} lies outside the {which} term domain {}",
                        i + 1,
                        f.terms[i]
                    )));
                }
            }
        }
        let env = Self { bounds, utility, constraint, j_max, tol_feas };
        let c_at_bounds = env.constraint.eval(&StateVector(env.bounds.clone()))?;
        if c_at_bounds > tol_feas {
            return Err(ModelError::InvalidEnvironment(format!(
                "no feasible state: C(b) = {c_at_bounds} > 0"
            )));
        }
        Ok(env)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn utility(&self) -> &SeparableFunction {
        &self.utility
    }

    pub fn constraint(&self) -> &SeparableFunction {
        &self.constraint
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn tol_feas(&self) -> f64 {
        self.tol_feas
    }

    /// Copy of this environment with different bounds.
    pub fn with_bounds(&self, bounds: Vec<f64>) -> Result<Self, ModelError> {
        Self::with_options(bounds, self.utility.clone(), self.constraint.clone(), self.j_max, self.tol_feas)
    }

    /// Copy with utility and constraint weights both multiplied by `factor`.
    /// The constraint offset scales too, so the feasible set is unchanged.
    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        let mut constraint = self.constraint.scaled(factor);
        constraint.offset *= factor;
        Self::with_options(
            self.bounds.clone(),
            self.utility.scaled(factor),
            constraint,
            self.j_max,
            self.tol_feas,
        )
    }

    pub fn eval_utility(&self, s: &StateVector) -> Result<f64, ModelError> {
        self.utility.eval(s)
    }

    pub fn eval_constraint(&self, s: &StateVector) -> Result<f64, ModelError> {
        self.constraint.eval(s)
    }

    pub fn is_admissible(&self, s: &StateVector) -> bool {
        s.len() == self.dim() && s.iter().zip(&self.bounds).all(|(&x, &b)| x >= b - self.tol_feas)
    }

    /// `C(s) <= tol_feas` and `s_i >= b_i - tol_feas` for all `i`.
    pub fn is_feasible(&self, s: &StateVector) -> Result<bool, ModelError> {
        let c = self.constraint.eval(s)?;
        Ok(c <= self.tol_feas && self.is_admissible(s))
    }

    /// `(dU/ds_i) / (dC/ds_i)` for every attribute.
    pub fn sensitivity(&self, s: &StateVector) -> Result<Vec<f64>, ModelError> {
        let gu = self.utility.grad(s)?;
        let gc = self.constraint.grad(s)?;
        gu.iter()
            .zip(&gc)
            .enumerate()
            .map(|(index, (&u, &c))| {
                if c.is_nan() || c < MIN_CONSTRAINT_SLOPE {
                    Err(ModelError::DegenerateConstraintGradient { index, slope: c })
                } else {
                    Ok(u / c)
                }
            })
            .collect()
    }

    /// Attributes ordered by decreasing sensitivity, ties by ascending index.
    pub fn rank_by_sensitivity(&self, s: &StateVector) -> Result<SensitivityRanking, ModelError> {
        let values = self.sensitivity(s)?;
        let mut order: Vec<usize> = (0..values.len()).collect();
        // stable sort keeps ascending index among ties
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
        Ok(SensitivityRanking { order, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRanking {
    /// Attribute indices, most sensitive first.
    pub order: Vec<usize>,
    /// Sensitivity per attribute, indexed by attribute.
    pub values: Vec<f64>,
}

impl SensitivityRanking {
    pub fn top(&self, j: usize) -> &[usize] {
        &self.order[..j.min(self.order.len())]
    }

    /// Sensitivity at rank `j` minus sensitivity at rank `j + 1` (1-based ranks).
    pub fn gap(&self, j: usize) -> Option<f64> {
        if j == 0 || j >= self.order.len() {
            return None;
        }
        Some(self.values[self.order[j - 1]] - self.values[self.order[j]])
    }

    /// True when the top `j` attributes are strictly more sensitive than the rest.
    pub fn strict_gap(&self, j: usize) -> bool {
        self.gap(j).is_some_and(|g| g > 0.0)
    }

    pub fn spread(&self) -> f64 {
        let first = self.values[self.order[0]];
        let last = self.values[*self.order.last().unwrap()];
        first - last
    }
}

/// Proxy attribute set with the anchor that pins the unmentioned attributes:
/// `proxy_U(s_J) = U(s_J, anchor_K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxySpec {
    indices: Vec<usize>,
    anchor: StateVector,
}

impl ProxySpec {
    /// `indices` are zero-based; they are stored sorted.
    pub fn new(env: &Environment, indices: &[usize], anchor: StateVector) -> Result<Self, ModelError> {
        let dim = env.dim();
        if anchor.len() != dim {
            return Err(ModelError::DimensionMismatch { expected: dim, got: anchor.len() });
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return Err(ModelError::InvalidProxy(format!("proxy indices must be distinct: {indices:?}")));
        }
        if let Some(&bad) = sorted.iter().find(|&&i| i >= dim) {
            return Err(ModelError::InvalidProxy(format!("proxy index {} is outside 1..={dim}", bad + 1)));
        }
        let j = sorted.len();
        if j == 0 || j >= dim {
            return Err(ModelError::InvalidProxy(format!(
                "proxy must reference 1 <= J < L attributes (J < L), got J = {j} with L = {dim}"
            )));
        }
        if j > env.j_max() {
            return Err(ModelError::InvalidProxy(format!("J = {j} exceeds J_max = {}", env.j_max())));
        }
        Ok(Self { indices: sorted, anchor })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn anchor(&self) -> &StateVector {
        &self.anchor
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Boolean mask over all attributes, true on the proxy set.
    pub fn mask(&self, dim: usize) -> Vec<bool> {
        (0..dim).map(|i| self.contains(i)).collect()
    }

    /// Indices of the unmentioned attributes.
    pub fn unmentioned(&self, dim: usize) -> Vec<usize> {
        (0..dim).filter(|&i| !self.contains(i)).collect()
    }

    /// `s` with the unmentioned attributes replaced by the anchor.
    pub fn anchored_state(&self, s: &StateVector) -> StateVector {
        let mut out = self.anchor.clone();
        for &j in &self.indices {
            out[j] = s[j];
        }
        out
    }

    pub fn value(&self, env: &Environment, s: &StateVector) -> Result<f64, ModelError> {
        env.eval_utility(&self.anchored_state(s))
    }

    /// Gradient of the proxy utility, zero on the unmentioned attributes.
    pub fn gradient(&self, env: &Environment, s: &StateVector) -> Result<Vec<f64>, ModelError> {
        let full = env.utility().grad(&self.anchored_state(s))?;
        Ok(full.into_iter().enumerate().map(|(i, g)| if self.contains(i) { g } else { 0.0 }).collect())
    }

    /// One-based indices joined by `;`, as written to CSV.
    pub fn label(&self) -> String {
        self.indices.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(";")
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn contentrec_constraint_value() {
        let env = contentrec();
        assert_eq!(env.eval_constraint(&[1.0, 2.0, 6.0, 7.0].into()).unwrap(), -10.0);
    }

    #[test]
    fn loglinear_utility_values() {
        let env = loglinear(-0.9);
        assert_eq!(env.eval_utility(&[0.0; 4].into()).unwrap(), 0.0);
        let u = env.eval_utility(&[1.0; 4].into()).unwrap();
        assert!((u - 4.0 * 2f64.ln()).abs() < 1e-15);
        assert!((u - 2.772589).abs() < 1e-6);
    }

    #[test]
    fn analytic_gradients() {
        let env = contentrec();
        assert_eq!(env.constraint().grad(&[1.0, 2.0, 6.0, 7.0].into()).unwrap(), vec![2.0, 4.0, 12.0, 14.0]);
        let env = loglinear(-0.9);
        assert_eq!(env.utility().grad(&[1.0; 4].into()).unwrap(), vec![0.5; 4]);
    }

    #[test]
    fn finite_difference_linear_is_exact() {
        let f = SeparableFunction::uniform(TermSpec::Linear { weight: 3.0 }, 3, 0.0).unwrap();
        let g = f.finite_diff_grad(&[0.25, -4.0, 17.0].into(), 0.1).unwrap();
        assert!(close(&g, &[3.0; 3], 1e-12), "{g:?}");
    }

    #[test]
    fn finite_difference_self_check() {
        let env = contentrec();
        let g = env.constraint().finite_diff_grad(&[1.0, 2.0, 6.0, 7.0].into(), 1e-5).unwrap();
        assert!(close(&g, &[2.0, 4.0, 12.0, 14.0], 1e-8), "{g:?}");
    }

    #[test]
    fn finite_difference_rejects_bad_step() {
        let env = contentrec();
        let s: StateVector = [1.0; 4].into();
        assert_eq!(env.constraint().finite_diff_grad(&s, 0.0), Err(ModelError::InvalidStep(0.0)));
        assert!(env.constraint().finite_diff_grad(&s, -1.0).is_err());
        assert!(env.constraint().finite_diff_grad(&s, f64::NAN).is_err());
    }

    #[test]
    fn domain_violations() {
        let env = loglinear(-0.9);
        let err = env.eval_utility(&[0.0, -1.0, 0.0, 0.0].into()).unwrap_err();
        assert!(matches!(err, ModelError::DomainViolation { index: 1, .. }));
        let env = contentrec();
        let err = env.constraint().grad(&[0.0, 0.0, -0.5, 0.0].into()).unwrap_err();
        assert!(matches!(err, ModelError::DomainViolation { index: 2, .. }));
        // power domain includes zero
        assert!(env.eval_constraint(&[0.0; 4].into()).is_ok());
    }

    #[test]
    fn feasibility() {
        let env = contentrec();
        assert!(env.is_feasible(&[1.0, 2.0, 6.0, 7.0].into()).unwrap());
        assert!(!env.is_feasible(&[6.0; 4].into()).unwrap());
        let env = loglinear(-0.9);
        assert!(env.is_feasible(&[1.0; 4].into()).unwrap());
        assert!(!env.is_feasible(&[1.0, 1.0, 1.0, -0.95].into()).unwrap());
    }

    #[test]
    fn sensitivities() {
        let env = loglinear(-0.9);
        assert_eq!(env.sensitivity(&[1.0; 4].into()).unwrap(), vec![0.5; 4]);
        let env = contentrec();
        let sens = env.sensitivity(&[1.0, 2.0, 6.0, 7.0].into()).unwrap();
        assert!(close(&sens, &[0.5, 0.25, 1.0 / 12.0, 1.0 / 14.0], 1e-15));
        let far = env.sensitivity(&[1e9; 4].into()).unwrap();
        assert!(far.iter().all(|&x| x < 1e-9));
        let err = env.sensitivity(&[0.0, 1.0, 1.0, 1.0].into()).unwrap_err();
        assert!(matches!(err, ModelError::DegenerateConstraintGradient { index: 0, .. }));
    }

    #[test]
    fn ranking_examples() {
        let env = contentrec();
        let r = env.rank_by_sensitivity(&[1.0, 2.0, 6.0, 7.0].into()).unwrap();
        assert_eq!(r.order, vec![0, 1, 2, 3]);
        assert!(r.strict_gap(2));
        let r = env.rank_by_sensitivity(&[2.0, 2.0, 1.0, 1.0].into()).unwrap();
        assert_eq!(r.order, vec![2, 3, 0, 1]);
        assert!(r.strict_gap(2));
        assert!(!r.strict_gap(1));
        let env = loglinear(-0.9);
        let r = env.rank_by_sensitivity(&[1.0; 4].into()).unwrap();
        assert_eq!(r.order, vec![0, 1, 2, 3]);
        assert!((1..4).all(|j| !r.strict_gap(j)));
        assert_eq!(r.gap(0), None);
        assert_eq!(r.gap(4), None);
    }

    #[test]
    fn environment_validation() {
        let u = SeparableFunction::uniform(TermSpec::Linear { weight: 1.0 }, 2, 0.0).unwrap();
        let c = SeparableFunction::uniform(TermSpec::Linear { weight: 1.0 }, 2, -2.0).unwrap();
        assert!(Environment::new(vec![0.0, 0.0], u.clone(), c.clone()).is_ok());
        // C(b) > 0
        assert!(Environment::new(vec![5.0, 0.0], u.clone(), c.clone()).is_err());
        assert!(Environment::new(vec![f64::NEG_INFINITY, 0.0], u.clone(), c.clone()).is_err());
        assert!(Environment::with_options(vec![0.0, 0.0], u.clone(), c.clone(), 2, 1e-9).is_err());
        assert!(Environment::new(vec![0.0; 3], u.clone(), c.clone()).is_err());
        // bound outside the log domain
        let ul = SeparableFunction::uniform(TermSpec::Log { scale: 1.0, shift: 1.0 }, 2, 0.0).unwrap();
        assert!(Environment::new(vec![-1.0, 0.0], ul, c).is_err());
        assert!(SeparableFunction::new(vec![TermSpec::Linear { weight: 0.0 }], 0.0).is_err());
        assert!(SeparableFunction::new(vec![TermSpec::Power { exponent: -1.0, weight: 1.0 }], 0.0).is_err());
    }

    #[test]
    fn proxy_validation_and_value() {
        let env = loglinear(-0.9);
        let anchor: StateVector = [1.0; 4].into();
        assert!(ProxySpec::new(&env, &[0, 0], anchor.clone()).is_err());
        assert!(ProxySpec::new(&env, &[0, 4], anchor.clone()).is_err());
        assert!(ProxySpec::new(&env, &[], anchor.clone()).is_err());
        assert!(ProxySpec::new(&env, &[0, 1, 2, 3], anchor.clone()).is_err());
        let p = ProxySpec::new(&env, &[1, 0], anchor).unwrap();
        assert_eq!(p.indices(), &[0, 1]);
        assert_eq!(p.label(), "1;2");
        let s: StateVector = [2.0, 0.0, -0.5, 3.0].into();
        let expected = 3f64.ln() + 1f64.ln() + 2.0 * 2f64.ln();
        assert!((p.value(&env, &s).unwrap() - expected).abs() < 1e-15);
        assert_eq!(p.gradient(&env, &s).unwrap(), vec![1.0 / 3.0, 1.0, 0.0, 0.0]);
    }
}
