//! Loss-stream generators for the online simulations.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fpl::LossVector;
use crate::error::{Error, Result};

/// A named loss environment. In JSON the variant name sits under `name` and
/// its fields under `params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "kebab-case")]
pub enum Environment {
    /// Cyclic adversary: round `t` puts loss 1 on arm `π(t mod K)` and 0
    /// elsewhere, for a permutation `π` drawn per stream. Cumulative losses
    /// of all arms stay within 1 of each other.
    NearTie,
    /// The same loss vector every round.
    Constant { losses: Vec<f64> },
    /// Arm 0 has loss 0 and the others 1 until round `floor(at * T)`; from
    /// then on arm 1 has loss 0 and the others 1.
    Flip {
        #[serde(default = "half")]
        at: f64,
    },
    /// Independent Bernoulli losses with the given means.
    Bernoulli { means: Vec<f64> },
}

fn half() -> f64 {
    0.5
}

/// A generated stream and the rounds at which a new stationary segment starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub losses: Vec<LossVector>,
    pub change_points: Vec<usize>,
}

impl Environment {
    /// Number of actions this environment produces when asked for `k`.
    pub fn arms(&self, k: usize) -> usize {
        match self {
            Environment::Constant { losses } => losses.len(),
            Environment::Bernoulli { means } => means.len(),
            Environment::NearTie | Environment::Flip { .. } => k,
        }
    }

    /// Means of the per-round losses, for stationary environments.
    pub fn means(&self) -> Option<Vec<f64>> {
        match self {
            Environment::Constant { losses } => Some(losses.clone()),
            Environment::Bernoulli { means } => Some(means.clone()),
            _ => None,
        }
    }

    pub fn generate<R: Rng + ?Sized>(&self, horizon: usize, k: usize, rng: &mut R) -> Result<Stream> {
        let k = self.arms(k);
        if k == 0 {
            return Err(Error::invalid("environment needs at least one arm"));
        }
        let mut change_points = Vec::new();
        let losses = match self {
            Environment::NearTie => {
                let mut perm: Vec<usize> = (0..k).collect();
                perm.shuffle(rng);
                (0..horizon)
                    .map(|t| {
                        let mut l = vec![0.0; k];
                        l[perm[t % k]] = 1.0;
                        LossVector::new(l)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            Environment::Constant { losses } => {
                let v = LossVector::new(losses.clone())?;
                vec![v; horizon]
            }
            Environment::Flip { at } => {
                if k < 2 {
                    return Err(Error::invalid("flip environment needs at least two arms"));
                }
                if !(0.0..=1.0).contains(at) {
                    return Err(Error::invalid(format!("flip point {at} outside [0, 1]")));
                }
                let switch = (at * horizon as f64).floor() as usize;
                if switch > 0 && switch < horizon {
                    change_points.push(switch);
                }
                (0..horizon)
                    .map(|t| {
                        let good = usize::from(t >= switch);
                        let mut l = vec![1.0; k];
                        l[good] = 0.0;
                        LossVector::new(l)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            Environment::Bernoulli { means } => {
                if means.iter().any(|m| !(0.0..=1.0).contains(m)) {
                    return Err(Error::invalid("Bernoulli means must lie in [0, 1]"));
                }
                (0..horizon)
                    .map(|_| {
                        let l = means
                            .iter()
                            .map(|&m| if rng.random::<f64>() < m { 1.0 } else { 0.0 })
                            .collect();
                        LossVector::new(l)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(Stream { losses, change_points })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn near_tie_keeps_columns_within_one() {
        let s = Environment::NearTie.generate(1003, 8, &mut seeded(2)).unwrap();
        let mut cum = [0.0; 8];
        for l in &s.losses {
            assert_eq!(l.values().iter().sum::<f64>(), 1.0);
            for (c, v) in cum.iter_mut().zip(l.values()) {
                *c += v;
            }
            let hi = cum.iter().cloned().fold(f64::MIN, f64::max);
            let lo = cum.iter().cloned().fold(f64::MAX, f64::min);
            assert!(hi - lo <= 1.0);
        }
        assert!(s.change_points.is_empty());
    }

    #[test]
    fn flip_switches_the_good_arm_once() {
        let s = Environment::Flip { at: 0.5 }.generate(10, 2, &mut seeded(0)).unwrap();
        assert_eq!(s.change_points, vec![5]);
        assert_eq!(s.losses[4].values(), &[0.0, 1.0]);
        assert_eq!(s.losses[5].values(), &[1.0, 0.0]);
    }

    #[test]
    fn bernoulli_frequencies_match_means() {
        let env = Environment::Bernoulli { means: vec![0.3, 0.0] };
        let s = env.generate(20_000, 0, &mut seeded(4)).unwrap();
        let f = s.losses.iter().map(|l| l.values()[0]).sum::<f64>() / 20_000.0;
        assert!((f - 0.3).abs() < 0.02, "{f}");
        assert!(s.losses.iter().all(|l| l.values()[1] == 0.0));
    }

    #[test]
    fn json_shape_uses_name_and_params() {
        let env: Environment = serde_json::from_str(r#"{"name":"constant","params":{"losses":[0,1]}}"#).unwrap();
        assert_eq!(env, Environment::Constant { losses: vec![0.0, 1.0] });
        let env: Environment = serde_json::from_str(r#"{"name":"near-tie"}"#).unwrap();
        assert_eq!(env, Environment::NearTie);
        let env: Environment = serde_json::from_str(r#"{"name":"flip","params":{}}"#).unwrap();
        assert_eq!(env, Environment::Flip { at: 0.5 });
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut rng = seeded(0);
        assert!(Environment::Constant { losses: vec![2.0] }
            .generate(3, 1, &mut rng)
            .is_err());
        assert!(Environment::Flip { at: 0.5 }.generate(3, 1, &mut rng).is_err());
        assert!(Environment::NearTie.generate(3, 0, &mut rng).is_err());
    }
}
