//! Fixed-layout feature vectors.
//!
//! Layout (d = 12): seven category one-hot slots, then `log2(size)`,
//! density, sortedness, condition proxy and constraint ratio. Slots that do
//! not apply to a problem are 0.

use super::{Category, Payload};
use crate::comb::FeatureVector;

pub const FEATURE_DIM: usize = 12;
pub const SLOT_LOG_SIZE: usize = 7;
pub const SLOT_DENSITY: usize = 8;
pub const SLOT_SORTEDNESS: usize = 9;
pub const SLOT_CONDITION: usize = 10;
pub const SLOT_CONSTRAINT_RATIO: usize = 11;

/// Fraction of adjacent pairs that are not inversions; 1 for fewer than two
/// elements.
pub fn sortedness(values: &[i64]) -> f64 {
    if values.len() < 2 {
        return 1.0;
    }
    let ok = values.windows(2).filter(|w| w[0] <= w[1]).count();
    ok as f64 / (values.len() - 1) as f64
}

/// Ratio of the largest to the smallest row norm.
pub fn row_norm_ratio(rows: &[Vec<f64>]) -> f64 {
    let norms: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let hi = norms.iter().cloned().fold(0.0, f64::max);
    let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 && lo.is_finite() {
        hi / lo
    } else {
        0.0
    }
}

pub fn extract_features(payload: &Payload) -> FeatureVector {
    let mut phi = vec![0.0; FEATURE_DIM];
    let category: Category = payload.problem().category();
    phi[category.index()] = 1.0;
    phi[SLOT_LOG_SIZE] = (payload.size().max(1) as f64).log2();
    match payload {
        Payload::Sorting(s) => phi[SLOT_SORTEDNESS] = sortedness(&s.values),
        Payload::OrderStatistics(s) => phi[SLOT_SORTEDNESS] = sortedness(&s.values),
        Payload::ShortestPath(p) => phi[SLOT_DENSITY] = p.graph.density(),
        Payload::Mst(g) => phi[SLOT_DENSITY] = g.density(),
        Payload::LinearSystem(s) => {
            let n = s.b.len();
            let nonzero = s.a.iter().flatten().filter(|x| **x != 0.0).count();
            phi[SLOT_DENSITY] = nonzero as f64 / (n * n) as f64;
            phi[SLOT_CONDITION] = row_norm_ratio(&s.a);
        }
        Payload::LinearProgram(lp) => {
            phi[SLOT_CONDITION] = row_norm_ratio(&lp.a);
            phi[SLOT_CONSTRAINT_RATIO] = lp.b.len() as f64 / lp.c.len() as f64;
        }
        Payload::Nonconvex(_) => {}
        Payload::Knapsack(k) => {
            let total: u64 = k.weights.iter().sum();
            if total > 0 {
                phi[SLOT_CONSTRAINT_RATIO] = k.capacity as f64 / total as f64;
            }
        }
        Payload::Sat(f) => phi[SLOT_CONSTRAINT_RATIO] = f.clauses.len() as f64 / f.num_vars.max(1) as f64,
        Payload::Integration(_) => {}
    }
    FeatureVector::new(phi).expect("features are finite by construction")
}
