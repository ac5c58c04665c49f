//! 0/1 knapsack with integer weights and values.
//!
//! Quality is `achieved / optimal` value for a feasible selection (0 if the
//! selection is invalid or overweight). The optimum comes from a DP over total
//! value, independent of the capacity DP used as the systematic solver.

#![allow(clippy::needless_range_loop)]

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Deadline, Expired};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnapsackInstance {
    pub weights: Vec<u64>,
    pub values: Vec<u64>,
    pub capacity: u64,
}

/// Weights and values in `1..=100`; capacity is half the total weight.
pub fn generate<R: Rng + ?Sized>(n: usize, rng: &mut R) -> KnapsackInstance {
    let weights: Vec<u64> = (0..n).map(|_| rng.random_range(1..=100)).collect();
    let values = (0..n).map(|_| rng.random_range(1..=100)).collect();
    let capacity = weights.iter().sum::<u64>() / 2;
    KnapsackInstance {
        weights,
        values,
        capacity,
    }
}

/// Exact DP over capacities with a keep table for reconstruction.
pub fn dynamic_program(k: &KnapsackInstance, deadline: &Deadline) -> Result<Vec<usize>, Expired> {
    let n = k.weights.len();
    let cap = k.capacity as usize;
    let mut best = vec![0u64; cap + 1];
    let mut keep = vec![vec![false; cap + 1]; n];
    for i in 0..n {
        deadline.check()?;
        let w = k.weights[i] as usize;
        for c in (w..=cap).rev() {
            let with = best[c - w] + k.values[i];
            if with > best[c] {
                best[c] = with;
                keep[i][c] = true;
            }
        }
    }
    let mut items = Vec::new();
    let mut c = cap;
    for i in (0..n).rev() {
        if keep[i][c] {
            items.push(i);
            c -= k.weights[i] as usize;
        }
    }
    items.reverse();
    Ok(items)
}

const GREEDY_RESTARTS: usize = 16;

/// Greedy by value density with multiplicative noise on the densities,
/// repeated; the best packing wins. The first pass is noise-free.
pub fn randomized_greedy<R: Rng + ?Sized>(
    k: &KnapsackInstance,
    rng: &mut R,
    deadline: &Deadline,
) -> Result<Vec<usize>, Expired> {
    let n = k.weights.len();
    let mut best: Vec<usize> = Vec::new();
    let mut best_value = 0;
    for pass in 0..GREEDY_RESTARTS {
        deadline.check()?;
        let noise = if pass == 0 { 0.0 } else { 0.3 };
        let mut order: Vec<(f64, usize)> = (0..n)
            .map(|i| {
                let density = k.values[i] as f64 / k.weights[i].max(1) as f64;
                (density * (1.0 + noise * rng.random::<f64>()), i)
            })
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let (mut room, mut value, mut chosen) = (k.capacity, 0, Vec::new());
        for (_, i) in order {
            if k.weights[i] <= room {
                room -= k.weights[i];
                value += k.values[i];
                chosen.push(i);
            }
        }
        if value > best_value {
            best_value = value;
            chosen.sort_unstable();
            best = chosen;
        }
    }
    Ok(best)
}

/// Optimal value via minimum weight per achievable total value.
pub fn optimal_value(k: &KnapsackInstance) -> u64 {
    let total: u64 = k.values.iter().sum();
    let mut min_weight = vec![u64::MAX; total as usize + 1];
    min_weight[0] = 0;
    for (w, v) in k.weights.iter().zip(&k.values) {
        for t in (*v as usize..=total as usize).rev() {
            let prev = min_weight[t - *v as usize];
            if prev != u64::MAX && prev + w < min_weight[t] {
                min_weight[t] = prev + w;
            }
        }
    }
    (0..=total as usize)
        .rev()
        .find(|&t| min_weight[t] <= k.capacity)
        .unwrap_or(0) as u64
}

pub fn quality(k: &KnapsackInstance, items: &[usize]) -> f64 {
    let mut seen = vec![false; k.weights.len()];
    let (mut weight, mut value) = (0u64, 0u64);
    for &i in items {
        if i >= seen.len() || seen[i] {
            return 0.0;
        }
        seen[i] = true;
        weight += k.weights[i];
        value += k.values[i];
    }
    if weight > k.capacity {
        return 0.0;
    }
    let optimal = optimal_value(k);
    if optimal == 0 {
        1.0
    } else {
        value as f64 / optimal as f64
    }
}
