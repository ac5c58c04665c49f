//! Definite integrals on `[0, 1]` of sums of sinusoids plus a constant.
//!
//! The exact integral is known in closed form. Quality is
//! `min(1, 1e-3 / e)` for the relative error `e`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Deadline, Expired};

pub const RELATIVE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Integrand {
    pub offset: f64,
    pub terms: Vec<Term>,
}

impl Integrand {
    pub fn eval(&self, x: f64) -> f64 {
        self.offset
            + self
                .terms
                .iter()
                .map(|t| t.amplitude * (t.frequency * x + t.phase).sin())
                .sum::<f64>()
    }

    pub fn exact(&self) -> f64 {
        self.offset
            + self
                .terms
                .iter()
                .map(|t| t.amplitude * ((t.phase).cos() - (t.frequency + t.phase).cos()) / t.frequency)
                .sum::<f64>()
    }
}

/// `terms` sinusoids with amplitudes in `[0.1, 1]`, frequencies in
/// `[1, 20]` and an offset in `[1, 2]`.
pub fn generate<R: Rng + ?Sized>(terms: usize, rng: &mut R) -> Integrand {
    Integrand {
        offset: rng.random_range(1.0..2.0),
        terms: (0..terms)
            .map(|_| Term {
                amplitude: rng.random_range(0.1..1.0),
                frequency: rng.random_range(1.0..20.0),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            })
            .collect(),
    }
}

const SIMPSON_INTERVALS: usize = 2_000;

pub fn simpson(f: &Integrand, deadline: &Deadline) -> Result<f64, Expired> {
    let n = SIMPSON_INTERVALS;
    let h = 1.0 / n as f64;
    let mut sum = f.eval(0.0) + f.eval(1.0);
    for i in 1..n {
        if i % 512 == 0 {
            deadline.check()?;
        }
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f.eval(i as f64 * h);
    }
    Ok(sum * h / 3.0)
}

const MC_SAMPLES: usize = 200_000;

pub fn monte_carlo<R: Rng + ?Sized>(f: &Integrand, rng: &mut R, deadline: &Deadline) -> Result<f64, Expired> {
    let mut sum = 0.0;
    for i in 0..MC_SAMPLES {
        if i % 4096 == 0 {
            deadline.check()?;
        }
        sum += f.eval(rng.random::<f64>());
    }
    Ok(sum / MC_SAMPLES as f64)
}

pub fn quality(f: &Integrand, estimate: f64) -> f64 {
    if !estimate.is_finite() {
        return 0.0;
    }
    let exact = f.exact();
    let err = (estimate - exact).abs() / exact.abs().max(f64::MIN_POSITIVE);
    if err <= RELATIVE_TOLERANCE {
        1.0
    } else {
        RELATIVE_TOLERANCE / err
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn closed_form_matches_fine_trapezoid() {
        let f = generate(5, &mut seeded(2));
        let n = 200_000;
        let h = 1.0 / n as f64;
        let trap: f64 = (0..n)
            .map(|i| 0.5 * h * (f.eval(i as f64 * h) + f.eval((i + 1) as f64 * h)))
            .sum();
        assert!((trap - f.exact()).abs() < 1e-8);
    }

    #[test]
    fn simpson_is_accurate_and_monte_carlo_is_close() {
        let d = Deadline::unlimited();
        for s in 0..5 {
            let f = generate(8, &mut seeded(s));
            assert_eq!(quality(&f, simpson(&f, &d).unwrap()), 1.0);
            let est = monte_carlo(&f, &mut seeded(s), &d).unwrap();
            assert!((est - f.exact()).abs() < 0.02, "{est} {}", f.exact());
        }
    }

    #[test]
    fn quality_mapping() {
        let f = Integrand {
            offset: 2.0,
            terms: vec![],
        };
        assert_eq!(quality(&f, 2.0), 1.0);
        assert!((quality(&f, 2.02) - 0.1).abs() < 1e-9);
        assert_eq!(quality(&f, f64::NAN), 0.0);
    }
}
