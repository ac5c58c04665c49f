use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running statistics for one arm.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UcbArm {
    pub pulls: u64,
    /// Mean observed loss; meaningful once `pulls > 0`.
    pub mean: f64,
    pub cost: f64,
}

impl UcbArm {
    pub fn new(cost: f64) -> Self {
        UcbArm {
            pulls: 0,
            mean: 0.0,
            cost,
        }
    }

    pub fn record(&mut self, loss: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&loss) {
            return Err(Error::invalid(format!("loss {loss} outside [0, 1]")));
        }
        self.pulls += 1;
        self.mean += (loss - self.mean) / self.pulls as f64;
        Ok(())
    }
}

/// UCB1 on losses: unpulled arms first (lowest index), then
/// `argmin mean - sqrt(2 ln t / pulls)`.
pub fn ucb1_choose(arms: &[UcbArm], t: u64) -> Result<usize> {
    if arms.is_empty() {
        return Err(Error::invalid("UCB1 needs at least one arm"));
    }
    if t == 0 {
        return Err(Error::invalid("UCB1 round must be >= 1"));
    }
    if let Some(i) = arms.iter().position(|a| a.pulls == 0) {
        return Ok(i);
    }
    let log_t = (t as f64).ln();
    Ok(super::argmin(
        arms.iter().map(|a| a.mean - (2.0 * log_t / a.pulls as f64).sqrt()),
    ))
}

/// Cost-aware cascade over arms sorted by nondecreasing cost.
///
/// Scans cheapest-first and takes the first arm whose pessimistic total
/// `mean + beta + cost` beats the optimistic total `mean - beta + cost` of
/// every more expensive arm, with `beta = sqrt(ln T / max(pulls, 1))`. If no
/// arm qualifies, falls back to the smallest optimistic total. Unpulled arms
/// have an infinite confidence width, so each is tried once.
pub fn cascade_choose(arms: &[UcbArm], t: u64, horizon: u64) -> Result<usize> {
    if arms.is_empty() {
        return Err(Error::invalid("cascade needs at least one arm"));
    }
    if t == 0 {
        return Err(Error::invalid("cascade round must be >= 1"));
    }
    if arms.windows(2).any(|w| w[1].cost < w[0].cost) {
        return Err(Error::invalid("cascade arms must be sorted by nondecreasing cost"));
    }
    let log_h = (horizon.max(t) as f64).ln();
    let width = |a: &UcbArm| {
        if a.pulls == 0 {
            f64::INFINITY
        } else {
            (log_h / a.pulls as f64).sqrt()
        }
    };
    let optimistic: Vec<f64> = arms.iter().map(|a| a.mean - width(a) + a.cost).collect();
    let pessimistic: Vec<f64> = arms.iter().map(|a| a.mean + width(a) + a.cost).collect();

    // suffix minima of the optimistic totals of strictly more expensive positions
    let n = arms.len();
    let mut rest_min = vec![f64::INFINITY; n];
    for j in (0..n - 1).rev() {
        rest_min[j] = rest_min[j + 1].min(optimistic[j + 1]);
    }
    for j in 0..n {
        if pessimistic[j] < rest_min[j] {
            return Ok(j);
        }
    }
    Ok(super::argmin(optimistic))
}

/// The path taken through a [`UcbTree`]: `(gate index, arm)` pairs from the
/// root, and the leaf reached (leaves numbered left to right).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeRoute {
    pub leaf: usize,
    pub path: Vec<(usize, usize)>,
}

/// Complete binary tree of two-armed UCB1 gates. Gate `i` has children
/// `2i + 1` (arm 0, left) and `2i + 2` (arm 1, right).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbTree {
    depth: u32,
    gates: Vec<[UcbArm; 2]>,
    visits: Vec<u64>,
}

impl UcbTree {
    pub fn new(depth: u32) -> Result<Self> {
        if depth > 20 {
            return Err(Error::invalid(format!("tree depth {depth} too large")));
        }
        let gates = (1usize << depth) - 1;
        Ok(UcbTree {
            depth,
            gates: vec![[UcbArm::new(0.0), UcbArm::new(0.0)]; gates],
            visits: vec![0; gates],
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn leaf_count(&self) -> usize {
        1 << self.depth
    }

    pub fn gate(&self, index: usize) -> &[UcbArm; 2] {
        &self.gates[index]
    }

    /// Descends by UCB1 at each gate, using the gate's own visit count as its
    /// round number.
    pub fn select(&self) -> TreeRoute {
        let mut node = 0usize;
        let mut leaf = 0usize;
        let mut path = Vec::with_capacity(self.depth as usize);
        for _ in 0..self.depth {
            let arm = ucb1_choose(&self.gates[node], self.visits[node] + 1).expect("gates always have two arms");
            path.push((node, arm));
            leaf = 2 * leaf + arm;
            node = 2 * node + 1 + arm;
        }
        TreeRoute { leaf, path }
    }

    /// Credits the full leaf loss to every gate on the route.
    pub fn update(&mut self, route: &TreeRoute, loss: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&loss) {
            return Err(Error::invalid(format!("leaf loss {loss} outside [0, 1]")));
        }
        for &(gate, arm) in &route.path {
            self.gates[gate][arm].record(loss)?;
            self.visits[gate] += 1;
        }
        Ok(())
    }
}

/// One round of UCB-gated routing: select a leaf, observe its loss, update
/// the gates on the path.
pub fn ucb_tree_route(tree: &mut UcbTree, leaf_loss: impl FnOnce(usize) -> f64) -> Result<TreeRoute> {
    let route = tree.select();
    let loss = leaf_loss(route.leaf);
    tree.update(&route, loss)?;
    Ok(route)
}
