//! The comb operator.
//!
//! A problem instance is described by a [`FeatureVector`]. A logistic
//! [`SeedingFunction`] maps it to a [`CombParameter`] `t`, the probability of
//! dispatching to the randomized endpoint instead of the systematic one. The
//! N-path generalization replaces the two endpoints with a softmax
//! distribution over N algorithms.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Logistic inputs are clamped to this magnitude before exponentiation.
pub const LOGIT_CLAMP: f64 = 40.0;

/// Largest `f64` strictly below one; σ saturates here rather than at 1.0.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Normalized problem features; every entry is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("feature vector must have dimension >= 1"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("feature {i} is not finite ({})", values[i])));
        }
        Ok(FeatureVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        FeatureVector::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(f: FeatureVector) -> Self {
        f.0
    }
}

/// Probability mass on the randomized endpoint, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CombParameter(f64);

impl CombParameter {
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!("comb parameter {t} outside [0, 1]")));
        }
        Ok(CombParameter(t))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for CombParameter {
    type Error = Error;

    fn try_from(t: f64) -> Result<Self> {
        CombParameter::new(t)
    }
}

impl From<CombParameter> for f64 {
    fn from(t: CombParameter) -> Self {
        t.0
    }
}

/// Logistic function with input clamping. The result lies in the open
/// interval `(0, 1)` for every finite input.
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.min(BELOW_ONE)
}

/// Inverse of [`sigmoid`] on `(0, 1)`.
pub fn logit(t: f64) -> f64 {
    (t / (1.0 - t)).ln()
}

/// `t = σ(wᵀφ + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedingFunction {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl SeedingFunction {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("seeding function needs at least one weight"));
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("seeding parameters must be finite"));
        }
        Ok(SeedingFunction { weights, bias })
    }

    /// A seeding function that ignores features and always yields `σ(bias)`.
    pub fn constant(dim: usize, bias: f64) -> Self {
        SeedingFunction {
            weights: vec![0.0; dim.max(1)],
            bias,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// The linear score `wᵀφ + b`.
    pub fn score(&self, phi: &FeatureVector) -> Result<f64> {
        if phi.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "feature dimension {} does not match seeding dimension {}",
                phi.dim(),
                self.dim()
            )));
        }
        let dot: f64 = self.weights.iter().zip(phi.values()).map(|(w, x)| w * x).sum();
        Ok(dot + self.bias)
    }

    pub fn seed(&self, phi: &FeatureVector) -> Result<CombParameter> {
        Ok(CombParameter(sigmoid(self.score(phi)?)))
    }
}

/// Free-function form of [`SeedingFunction::seed`].
pub fn seed(s: &SeedingFunction, phi: &FeatureVector) -> Result<CombParameter> {
    s.seed(phi)
}

/// Which endpoint of the comb was dispatched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Systematic,
    Random,
}

/// Stochastic dispatch: systematic with probability `1 - t`, random with
/// probability `t`. Consumes exactly one uniform draw.
pub fn comb_select<R: Rng + ?Sized>(t: CombParameter, rng: &mut R) -> Endpoint {
    if rng::unit(rng) < 1.0 - t.value() {
        Endpoint::Systematic
    } else {
        Endpoint::Random
    }
}

/// Thresholded dispatch: random iff `t > 0.5`; ties go to the systematic side.
pub fn comb_select_deterministic(t: CombParameter) -> Endpoint {
    if t.value() > 0.5 {
        Endpoint::Random
    } else {
        Endpoint::Systematic
    }
}

/// Probability distribution over N algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PathDistribution(Vec<f64>);

/// Absolute tolerance on the total mass of a [`PathDistribution`].
pub const MASS_TOLERANCE: f64 = 1e-9;

impl PathDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid("path distribution must be nonempty"));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("probabilities must be finite and >= 0"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(PathDistribution(probabilities))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for PathDistribution {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        PathDistribution::new(p)
    }
}

impl From<PathDistribution> for Vec<f64> {
    fn from(p: PathDistribution) -> Self {
        p.0
    }
}

/// Numerically stable softmax over arbitrary finite scores.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn n_path_distribution(scores: &[f64]) -> Result<PathDistribution> {
    if scores.is_empty() {
        return Err(Error::invalid("n-path comb needs at least one score"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    Ok(PathDistribution(softmax(scores)))
}

/// Inverse-CDF sampling. Consumes exactly one uniform draw.
pub fn sample_path<R: Rng + ?Sized>(p: &PathDistribution, rng: &mut R) -> usize {
    let u = rng::unit(rng);
    let mut cumulative = 0.0;
    for (i, &pi) in p.0.iter().enumerate() {
        cumulative += pi;
        if u < cumulative {
            return i;
        }
    }
    // rounding left the total a hair under 1: fall back to the last index with mass
    p.0.iter().rposition(|&pi| pi > 0.0).unwrap_or(0)
}
