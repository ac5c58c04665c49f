//! Satisfiability of CNF formulas.
//!
//! Instances are random 3-SAT with a planted solution, so every generated
//! formula is satisfiable. Quality of an assignment is the fraction of
//! clauses it satisfies. An "unsatisfiable" answer scores 1 only when
//! verified: by brute force for at most 20 variables, and never when a
//! planted solution exists.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Deadline, Expired};

pub const DEFAULT_CLAUSE_RATIO: f64 = 4.0;
const BRUTE_FORCE_LIMIT: usize = 20;

/// Clauses are lists of nonzero DIMACS-style literals: `v` or `-v` for
/// variable `v` in `1..=num_vars`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<Vec<bool>>,
}

fn literal_true(lit: i32, assignment: &[bool]) -> bool {
    assignment[lit.unsigned_abs() as usize - 1] == (lit > 0)
}

impl Formula {
    pub fn satisfied_count(&self, assignment: &[bool]) -> usize {
        self.clauses
            .iter()
            .filter(|c| c.iter().any(|&l| literal_true(l, assignment)))
            .count()
    }
}

/// `round(ratio * n)` clauses over `min(3, n)` distinct variables each, with
/// signs resampled until the planted assignment satisfies the clause.
pub fn generate_planted<R: Rng + ?Sized>(n: usize, ratio: f64, rng: &mut R) -> Formula {
    let planted: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    let m = (ratio * n as f64).round() as usize;
    let width = n.min(3);
    let clauses = (0..m)
        .map(|_| {
            let vars: Vec<usize> = sample(rng, n, width).into_vec();
            loop {
                let clause: Vec<i32> = vars
                    .iter()
                    .map(|&v| if rng.random() { v as i32 + 1 } else { -(v as i32 + 1) })
                    .collect();
                if clause.iter().any(|&l| literal_true(l, &planted)) {
                    break clause;
                }
            }
        })
        .collect();
    Formula {
        num_vars: n,
        clauses,
        planted: Some(planted),
    }
}

/// Davis-Putnam-Logemann-Loveland search with unit propagation, branching on
/// the first free literal of the first open clause.
pub fn dpll(f: &Formula, deadline: &Deadline) -> Result<Option<Vec<bool>>, Expired> {
    fn value(lit: i32, a: &[Option<bool>]) -> Option<bool> {
        a[lit.unsigned_abs() as usize - 1].map(|v| v == (lit > 0))
    }

    fn search(
        f: &Formula,
        mut a: Vec<Option<bool>>,
        deadline: &Deadline,
    ) -> Result<Option<Vec<Option<bool>>>, Expired> {
        deadline.check()?;
        loop {
            let mut changed = false;
            for clause in &f.clauses {
                let mut free = None;
                let mut free_count = 0;
                let mut sat = false;
                for &lit in clause {
                    match value(lit, &a) {
                        Some(true) => {
                            sat = true;
                            break;
                        }
                        Some(false) => {}
                        None => {
                            free_count += 1;
                            free = Some(lit);
                        }
                    }
                }
                if sat {
                    continue;
                }
                match (free_count, free) {
                    (0, _) => return Ok(None),
                    (1, Some(lit)) => {
                        a[lit.unsigned_abs() as usize - 1] = Some(lit > 0);
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }
        let branch = f.clauses.iter().find_map(|clause| {
            if clause.iter().any(|&l| value(l, &a) == Some(true)) {
                None
            } else {
                clause.iter().copied().find(|&l| value(l, &a).is_none())
            }
        });
        let Some(lit) = branch else {
            return Ok(Some(a));
        };
        let var = lit.unsigned_abs() as usize - 1;
        for polarity in [lit > 0, lit <= 0] {
            let mut next = a.clone();
            next[var] = Some(polarity);
            if let Some(done) = search(f, next, deadline)? {
                return Ok(Some(done));
            }
        }
        Ok(None)
    }

    let result = search(f, vec![None; f.num_vars], deadline)?;
    Ok(result.map(|a| a.into_iter().map(|v| v.unwrap_or(false)).collect()))
}

const MAX_FLIPS: usize = 100_000;
const NOISE: f64 = 0.5;

/// WalkSAT: repeatedly pick an unsatisfied clause and flip either a random
/// variable in it (with probability 0.5) or the one breaking the fewest
/// satisfied clauses. Always returns the best assignment seen.
pub fn walksat<R: Rng + ?Sized>(f: &Formula, rng: &mut R, deadline: &Deadline) -> Result<Option<Vec<bool>>, Expired> {
    let n = f.num_vars;
    let mut a: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    let mut occurs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ci, clause) in f.clauses.iter().enumerate() {
        for &lit in clause {
            occurs[lit.unsigned_abs() as usize - 1].push(ci);
        }
    }
    let mut true_count: Vec<usize> = f
        .clauses
        .iter()
        .map(|c| c.iter().filter(|&&l| literal_true(l, &a)).count())
        .collect();
    let mut unsat: Vec<usize> = (0..f.clauses.len()).filter(|&c| true_count[c] == 0).collect();
    let mut position: Vec<usize> = vec![usize::MAX; f.clauses.len()];
    for (i, &c) in unsat.iter().enumerate() {
        position[c] = i;
    }
    let mut best = a.clone();
    let mut best_unsat = unsat.len();

    for flip in 0..MAX_FLIPS {
        if unsat.is_empty() {
            return Ok(Some(a));
        }
        if flip % 1024 == 0 {
            deadline.check()?;
        }
        let clause = &f.clauses[unsat[rng.random_range(0..unsat.len())]];
        if clause.is_empty() {
            break;
        }
        let var = if rng.random::<f64>() < NOISE {
            clause[rng.random_range(0..clause.len())].unsigned_abs() as usize - 1
        } else {
            let breaks = |v: usize| {
                occurs[v]
                    .iter()
                    .filter(|&&c| {
                        true_count[c] == 1
                            && f.clauses[c]
                                .iter()
                                .any(|&l| l.unsigned_abs() as usize - 1 == v && literal_true(l, &a))
                    })
                    .count()
            };
            clause
                .iter()
                .map(|l| l.unsigned_abs() as usize - 1)
                .min_by_key(|&v| breaks(v))
                .unwrap_or(0)
        };
        a[var] = !a[var];
        for &c in &occurs[var] {
            let before = true_count[c];
            let after = f.clauses[c].iter().filter(|&&l| literal_true(l, &a)).count();
            true_count[c] = after;
            if before == 0 && after > 0 {
                let i = position[c];
                let last = *unsat.last().expect("clause was unsatisfied");
                unsat.swap_remove(i);
                if last != c {
                    position[last] = i;
                }
                position[c] = usize::MAX;
            } else if before > 0 && after == 0 {
                position[c] = unsat.len();
                unsat.push(c);
            }
        }
        if unsat.len() < best_unsat {
            best_unsat = unsat.len();
            best.copy_from_slice(&a);
        }
    }
    Ok(Some(if unsat.is_empty() { a } else { best }))
}

fn brute_force_satisfiable(f: &Formula) -> bool {
    let n = f.num_vars;
    let mut a = vec![false; n];
    for mask in 0u64..1 << n {
        for (i, v) in a.iter_mut().enumerate() {
            *v = mask >> i & 1 == 1;
        }
        if f.satisfied_count(&a) == f.clauses.len() {
            return true;
        }
    }
    false
}

pub fn quality(f: &Formula, answer: Option<&[bool]>) -> f64 {
    match answer {
        Some(a) if a.len() == f.num_vars => {
            if f.clauses.is_empty() {
                1.0
            } else {
                f.satisfied_count(a) as f64 / f.clauses.len() as f64
            }
        }
        Some(_) => 0.0,
        None => {
            let refuted = f.planted.is_none() && f.num_vars <= BRUTE_FORCE_LIMIT && !brute_force_satisfiable(f);
            if refuted {
                1.0
            } else {
                0.0
            }
        }
    }
}
