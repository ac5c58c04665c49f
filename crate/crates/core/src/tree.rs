//! Tree comb networks: binary trees of comb gates with algorithms at the
//! leaves.
//!
//! Node identifiers are binary path strings from the root: `""` is the root,
//! `"L"` its left child, `"LR"` the right child of that, and so on.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comb::{FeatureVector, SeedingFunction};
use crate::error::Result;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlgorithmId(pub String);

impl AlgorithmId {
    pub fn new(id: impl Into<String>) -> Self {
        AlgorithmId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AlgorithmId {
    fn from(s: &str) -> Self {
        AlgorithmId(s.to_owned())
    }
}

/// A gate with exactly two children, or a leaf algorithm.
///
/// Serialized as `{"gate": {...}, "left": ..., "right": ...}` or
/// `{"leaf": "<algorithm-id>"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeCombNode {
    Gate {
        gate: SeedingFunction,
        left: Box<TreeCombNode>,
        right: Box<TreeCombNode>,
    },
    Leaf {
        leaf: AlgorithmId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Left,
    Right,
}

impl Decision {
    fn letter(self) -> char {
        match self {
            Decision::Left => 'L',
            Decision::Right => 'R',
        }
    }
}

/// How gates turn their comb parameter into a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoutingMode {
    /// Left with probability `1 - t`, one uniform draw per gate.
    #[default]
    Probabilistic,
    /// Right iff `t > 0.5`; consumes no randomness.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub node: String,
    pub t: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub steps: Vec<TraceStep>,
    pub terminal: AlgorithmId,
}

impl TreeCombNode {
    pub fn leaf(id: impl Into<String>) -> Self {
        TreeCombNode::Leaf {
            leaf: AlgorithmId::new(id),
        }
    }

    pub fn gate(gate: SeedingFunction, left: TreeCombNode, right: TreeCombNode) -> Self {
        TreeCombNode::Gate {
            gate,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Complete tree of the given depth. `make_gate` receives each internal
    /// node's path id; leaves are named by `make_leaf(index)` in left-to-right
    /// order.
    pub fn complete(
        depth: u32,
        make_gate: &mut impl FnMut(&str) -> SeedingFunction,
        make_leaf: &mut impl FnMut(usize) -> String,
    ) -> Self {
        fn build(
            path: &mut String,
            remaining: u32,
            next_leaf: &mut usize,
            make_gate: &mut impl FnMut(&str) -> SeedingFunction,
            make_leaf: &mut impl FnMut(usize) -> String,
        ) -> TreeCombNode {
            if remaining == 0 {
                let id = make_leaf(*next_leaf);
                *next_leaf += 1;
                return TreeCombNode::leaf(id);
            }
            let gate = make_gate(path);
            path.push('L');
            let left = build(path, remaining - 1, next_leaf, make_gate, make_leaf);
            path.pop();
            path.push('R');
            let right = build(path, remaining - 1, next_leaf, make_gate, make_leaf);
            path.pop();
            TreeCombNode::gate(gate, left, right)
        }
        let mut next_leaf = 0;
        build(&mut String::new(), depth, &mut next_leaf, make_gate, make_leaf)
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeCombNode::Leaf { .. } => 1,
            TreeCombNode::Gate { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Length of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeCombNode::Leaf { .. } => 0,
            TreeCombNode::Gate { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<&AlgorithmId> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a AlgorithmId>) {
        match self {
            TreeCombNode::Leaf { leaf } => out.push(leaf),
            TreeCombNode::Gate { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    /// Probabilistic routing to a leaf.
    pub fn route<R: Rng + ?Sized>(&self, phi: &FeatureVector, rng: &mut R) -> Result<AlgorithmId> {
        self.route_with(phi, RoutingMode::Probabilistic, rng)
    }

    pub fn route_with<R: Rng + ?Sized>(
        &self,
        phi: &FeatureVector,
        mode: RoutingMode,
        rng: &mut R,
    ) -> Result<AlgorithmId> {
        let mut node = self;
        loop {
            match node {
                TreeCombNode::Leaf { leaf } => return Ok(leaf.clone()),
                TreeCombNode::Gate { gate, left, right } => {
                    let t = gate.seed(phi)?.value();
                    node = match decide(t, mode, rng) {
                        Decision::Left => left,
                        Decision::Right => right,
                    };
                }
            }
        }
    }

    /// Routes like [`route`](Self::route) and records every gate visited.
    pub fn trace<R: Rng + ?Sized>(&self, phi: &FeatureVector, rng: &mut R) -> Result<ExecutionTrace> {
        self.trace_with(phi, RoutingMode::Probabilistic, rng)
    }

    pub fn trace_with<R: Rng + ?Sized>(
        &self,
        phi: &FeatureVector,
        mode: RoutingMode,
        rng: &mut R,
    ) -> Result<ExecutionTrace> {
        let mut steps = Vec::new();
        let mut path = String::new();
        let mut node = self;
        loop {
            match node {
                TreeCombNode::Leaf { leaf } => {
                    return Ok(ExecutionTrace {
                        steps,
                        terminal: leaf.clone(),
                    })
                }
                TreeCombNode::Gate { gate, left, right } => {
                    let t = gate.seed(phi)?.value();
                    let decision = decide(t, mode, rng);
                    steps.push(TraceStep {
                        node: path.clone(),
                        t,
                        decision,
                    });
                    path.push(decision.letter());
                    node = match decision {
                        Decision::Left => left,
                        Decision::Right => right,
                    };
                }
            }
        }
    }

    /// Follows a recorded list of decisions without evaluating any gate.
    /// Returns `None` if the decisions run past a leaf or stop short of one.
    pub fn replay(&self, decisions: &[Decision]) -> Option<&AlgorithmId> {
        let mut node = self;
        for d in decisions {
            node = match (node, d) {
                (TreeCombNode::Gate { left, .. }, Decision::Left) => left,
                (TreeCombNode::Gate { right, .. }, Decision::Right) => right,
                (TreeCombNode::Leaf { .. }, _) => return None,
            };
        }
        match node {
            TreeCombNode::Leaf { leaf } => Some(leaf),
            TreeCombNode::Gate { .. } => None,
        }
    }
}

fn decide<R: Rng + ?Sized>(t: f64, mode: RoutingMode, rng: &mut R) -> Decision {
    let go_left = match mode {
        RoutingMode::Probabilistic => rng::unit(rng) < 1.0 - t,
        RoutingMode::Deterministic => t <= 0.5,
    };
    if go_left {
        Decision::Left
    } else {
        Decision::Right
    }
}

pub fn leaf_count(tree: &TreeCombNode) -> usize {
    tree.leaf_count()
}
