//! Minimization of a shifted Rastrigin function on `[-5.12, 5.12]^d`.
//!
//! The global minimum is 0 at the shift. Quality is `1 / (1 + f(x))`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Deadline, Expired};

pub const BOUND: f64 = 5.12;
const SHIFT_RANGE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RastriginInstance {
    pub shift: Vec<f64>,
}

impl RastriginInstance {
    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let tau = std::f64::consts::TAU;
        x.iter()
            .zip(&self.shift)
            .map(|(xi, si)| {
                let z = xi - si;
                z * z - 10.0 * (tau * z).cos() + 10.0
            })
            .sum()
    }
}

pub fn generate<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> RastriginInstance {
    RastriginInstance {
        shift: (0..dim).map(|_| rng.random_range(-SHIFT_RANGE..SHIFT_RANGE)).collect(),
    }
}

const GRID_POINTS: usize = 4096;

/// Full grid of about 4096 points, then compass search from the best one.
pub fn grid_descent(r: &RastriginInstance, deadline: &Deadline) -> Result<Vec<f64>, Expired> {
    let d = r.dim();
    let per_axis = ((GRID_POINTS as f64).powf(1.0 / d as f64).floor() as usize).clamp(3, 201);
    let step = 2.0 * BOUND / (per_axis - 1) as f64;
    let mut idx = vec![0usize; d];
    let mut best = vec![-BOUND; d];
    let mut best_value = f64::INFINITY;
    let mut x = vec![0.0; d];
    let mut count = 0u64;
    loop {
        count += 1;
        if count.is_multiple_of(1024) {
            deadline.check()?;
        }
        for (xi, &k) in x.iter_mut().zip(&idx) {
            *xi = -BOUND + k as f64 * step;
        }
        let v = r.value(&x);
        if v < best_value {
            best_value = v;
            best.copy_from_slice(&x);
        }
        let mut axis = 0;
        while axis < d {
            idx[axis] += 1;
            if idx[axis] < per_axis {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == d {
            break;
        }
    }

    let mut h = step / 2.0;
    while h > 1e-10 {
        deadline.check()?;
        let mut improved = false;
        for axis in 0..d {
            for dir in [-1.0, 1.0] {
                let mut y = best.clone();
                y[axis] = (y[axis] + dir * h).clamp(-BOUND, BOUND);
                let v = r.value(&y);
                if v < best_value {
                    best_value = v;
                    best = y;
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    Ok(best)
}

const ANNEAL_STEPS: usize = 50_000;
const T_START: f64 = 30.0;
const T_END: f64 = 1e-2;

/// Simulated annealing with geometric cooling and proposal width shrinking
/// with the temperature. Returns the best point visited.
pub fn annealing<R: Rng + ?Sized>(
    r: &RastriginInstance,
    rng: &mut R,
    deadline: &Deadline,
) -> Result<Vec<f64>, Expired> {
    let d = r.dim();
    let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(-BOUND..BOUND)).collect();
    let mut fx = r.value(&x);
    let mut best = x.clone();
    let mut best_value = fx;
    let cooling = (T_END / T_START).powf(1.0 / ANNEAL_STEPS as f64);
    let mut temp = T_START;
    for step in 0..ANNEAL_STEPS {
        if step % 1024 == 0 {
            deadline.check()?;
        }
        let width = 2.0 * (temp / T_START).sqrt() + 0.05;
        let y: Vec<f64> = x
            .iter()
            .map(|xi| (xi + rng.random_range(-width..width)).clamp(-BOUND, BOUND))
            .collect();
        let fy = r.value(&y);
        if fy <= fx || rng.random::<f64>() < ((fx - fy) / temp).exp() {
            x = y;
            fx = fy;
            if fx < best_value {
                best_value = fx;
                best.copy_from_slice(&x);
            }
        }
        temp *= cooling;
    }
    Ok(best)
}

pub fn quality(r: &RastriginInstance, x: &[f64]) -> f64 {
    if x.len() != r.dim() || x.iter().any(|v| !v.is_finite() || v.abs() > BOUND) {
        return 0.0;
    }
    1.0 / (1.0 + r.value(x))
}
