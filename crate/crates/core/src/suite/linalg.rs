//! Dense linear systems and small linear programs.
//!
//! Linear system quality is `min(1, 1e-8 / r)` for the relative residual
//! `r = |Ax - b| / |b|`. Linear program quality is `achieved / optimal`
//! objective for a feasible point (0 if infeasible), with the optimum found by
//! enumerating basic solutions.

#![allow(clippy::needless_range_loop)]

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Deadline, Expired};

pub const SYSTEM_TOLERANCE: f64 = 1e-8;
const FEASIBILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemInstance {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

/// `max c·x` subject to `A x <= b`, `x >= 0`, with `A >= 0` and `b > 0` so the
/// origin is feasible and the region is bounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Uniform random matrix with a boosted diagonal and a uniform random
/// solution.
pub fn generate_system<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SystemInstance {
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    for (i, row) in a.iter_mut().enumerate() {
        let off: f64 = row.iter().map(|x: &f64| x.abs()).sum();
        row[i] = off * 0.3 + 1.0;
    }
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = a.iter().map(|row| dot(row, &x)).collect();
    SystemInstance { a, b }
}

pub fn gaussian_elimination(s: &SystemInstance, deadline: &Deadline) -> Result<Vec<f64>, Expired> {
    let n = s.b.len();
    let mut m: Vec<Vec<f64>> =
        s.a.iter()
            .zip(&s.b)
            .map(|(r, &b)| {
                let mut r = r.clone();
                r.push(b);
                r
            })
            .collect();
    for col in 0..n {
        deadline.check()?;
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap_or(col);
        m.swap(col, pivot);
        let p = m[col][col];
        if p == 0.0 {
            continue;
        }
        for row in col + 1..n {
            let f = m[row][col] / p;
            if f != 0.0 {
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = if m[i][i] == 0.0 {
            0.0
        } else {
            (m[i][n] - tail) / m[i][i]
        };
    }
    Ok(x)
}

const KACZMARZ_TOLERANCE: f64 = 1e-10;
const KACZMARZ_MAX_SWEEPS: usize = 20_000;

/// Randomized Kaczmarz with rows sampled proportionally to their squared
/// norms. Stops once the relative residual drops below 1e-10 or after a
/// fixed number of sweeps.
pub fn kaczmarz<R: Rng + ?Sized>(s: &SystemInstance, rng: &mut R, deadline: &Deadline) -> Result<Vec<f64>, Expired> {
    let n = s.b.len();
    let sq: Vec<f64> = s.a.iter().map(|r| dot(r, r)).collect();
    let mut x = vec![0.0; s.a.first().map_or(0, |r| r.len())];
    let Ok(rows) = WeightedIndex::new(&sq) else {
        return Ok(x);
    };
    let b_norm = norm(&s.b).max(f64::MIN_POSITIVE);
    for _ in 0..KACZMARZ_MAX_SWEEPS {
        deadline.check()?;
        for _ in 0..n {
            let i = rows.sample(rng);
            let step = (s.b[i] - dot(&s.a[i], &x)) / sq[i];
            for (xj, aij) in x.iter_mut().zip(&s.a[i]) {
                *xj += step * aij;
            }
        }
        let r: Vec<f64> = s.a.iter().zip(&s.b).map(|(row, b)| dot(row, &x) - b).collect();
        if norm(&r) / b_norm < KACZMARZ_TOLERANCE {
            break;
        }
    }
    Ok(x)
}

pub fn system_quality(s: &SystemInstance, x: &[f64]) -> f64 {
    if x.len() != s.b.len() || x.iter().any(|v| !v.is_finite()) {
        return 0.0;
    }
    let residual: f64 =
        s.a.iter()
            .zip(&s.b)
            .map(|(row, b)| (row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - b).powi(2))
            .sum::<f64>()
            .sqrt();
    let b_norm = s.b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rel = if b_norm > 0.0 { residual / b_norm } else { residual };
    if rel <= SYSTEM_TOLERANCE {
        1.0
    } else {
        SYSTEM_TOLERANCE / rel
    }
}

/// `n` variables and `max(1, 2n/3)` constraints.
pub fn generate_lp<R: Rng + ?Sized>(n: usize, rng: &mut R) -> LpInstance {
    let m = (2 * n / 3).max(1);
    LpInstance {
        c: (0..n).map(|_| rng.random_range(0.5..1.5)).collect(),
        a: (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(0.1..1.0)).collect())
            .collect(),
        b: (0..m).map(|_| rng.random_range(1.0..2.0) * n as f64).collect(),
    }
}

/// Tableau simplex with Bland's anti-cycling rule, starting from the slack
/// basis.
pub fn simplex(lp: &LpInstance, deadline: &Deadline) -> Result<Vec<f64>, Expired> {
    let (m, n) = (lp.b.len(), lp.c.len());
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&lp.a[i]);
            row[n + i] = 1.0;
            row[width - 1] = lp.b[i];
            row
        })
        .collect();
    // objective row holds reduced costs of the minimization of -c·x
    let mut z = vec![0.0; width];
    for j in 0..n {
        z[j] = -lp.c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    const EPS: f64 = 1e-12;
    loop {
        deadline.check()?;
        let Some(enter) = (0..n + m).find(|&j| z[j] < -EPS) else {
            break;
        };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if t[i][enter] > EPS {
                let ratio = t[i][width - 1] / t[i][enter];
                leave = match leave {
                    None => Some(i),
                    Some(l) => {
                        let best = t[l][width - 1] / t[l][enter];
                        if ratio < best - EPS || ((ratio - best).abs() <= EPS && basis[i] < basis[l]) {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        let Some(r) = leave else { break };
        let p = t[r][enter];
        t[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[enter] != 0.0 {
                let f = row[enter];
                row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
            }
        }
        let f = z[enter];
        z.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
        basis[r] = enter;
    }
    let mut x = vec![0.0; n];
    for (i, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = t[i][width - 1].max(0.0);
        }
    }
    Ok(x)
}

const LP_SAMPLES: usize = 400;

/// Random points in the bounding box, repaired onto the feasible region by
/// scaling toward the origin and then pushed coordinate-wise (random order)
/// against the binding constraint. The best objective wins.
pub fn interior_sampling<R: Rng + ?Sized>(
    lp: &LpInstance,
    rng: &mut R,
    deadline: &Deadline,
) -> Result<Vec<f64>, Expired> {
    let n = lp.c.len();
    let upper: Vec<f64> = (0..n)
        .map(|j| {
            lp.a.iter()
                .zip(&lp.b)
                .filter(|(row, _)| row[j] > 0.0)
                .map(|(row, b)| b / row[j])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut best = vec![0.0; n];
    let mut best_value = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    for s in 0..LP_SAMPLES {
        if s % 32 == 0 {
            deadline.check()?;
        }
        let mut x: Vec<f64> = upper.iter().map(|u| rng.random::<f64>() * u).collect();
        let scale =
            lp.a.iter()
                .zip(&lp.b)
                .map(|(row, b)| {
                    let used = dot(row, &x);
                    if used > 0.0 {
                        b / used
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(1.0, f64::min);
        x.iter_mut().for_each(|v| *v *= scale);
        order.shuffle(rng);
        for &j in &order {
            let room =
                lp.a.iter()
                    .zip(&lp.b)
                    .filter(|(row, _)| row[j] > 0.0)
                    .map(|(row, b)| ((b - dot(row, &x)) / row[j]).max(0.0))
                    .fold(f64::INFINITY, f64::min);
            if room.is_finite() {
                x[j] += room;
            }
        }
        let value = dot(&lp.c, &x);
        if value > best_value {
            best_value = value;
            best = x;
        }
    }
    Ok(best)
}

/// Solves a square system by Gauss-Jordan elimination with full pivoting;
/// `None` if singular.
fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut cols: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, 0.0);
        for i in k..n {
            for j in k..n {
                if m[i][j].abs() > best {
                    (pi, pj, best) = (i, j, m[i][j].abs());
                }
            }
        }
        if best < 1e-12 {
            return None;
        }
        m.swap(k, pi);
        rhs.swap(k, pi);
        for row in m.iter_mut() {
            row.swap(k, pj);
        }
        cols.swap(k, pj);
        for i in 0..n {
            if i != k {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                rhs[i] -= f * rhs[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in 0..n {
        x[cols[k]] = rhs[k] / m[k][k];
    }
    Some(x)
}

fn lp_feasible(lp: &LpInstance, x: &[f64]) -> bool {
    x.len() == lp.c.len()
        && x.iter().all(|v| v.is_finite() && *v >= -FEASIBILITY_SLACK)
        && lp
            .a
            .iter()
            .zip(&lp.b)
            .all(|(row, b)| dot(row, x) <= b + FEASIBILITY_SLACK * (1.0 + b.abs()))
}

/// Optimum by enumerating every choice of `n` tight constraints among the
/// `m + n` (rows of `A` and the bounds `x >= 0`).
pub fn lp_optimum(lp: &LpInstance) -> f64 {
    let (m, n) = (lp.b.len(), lp.c.len());
    let mut best = 0.0f64;
    let mut chosen = Vec::with_capacity(n);
    fn visit(lp: &LpInstance, start: usize, total: usize, chosen: &mut Vec<usize>, best: &mut f64) {
        let (m, n) = (lp.b.len(), lp.c.len());
        if chosen.len() == n {
            let mut rows = Vec::with_capacity(n);
            let mut rhs = Vec::with_capacity(n);
            for &k in chosen.iter() {
                if k < m {
                    rows.push(lp.a[k].clone());
                    rhs.push(lp.b[k]);
                } else {
                    let mut e = vec![0.0; n];
                    e[k - m] = 1.0;
                    rows.push(e);
                    rhs.push(0.0);
                }
            }
            if let Some(x) = solve_square(rows, rhs) {
                if lp_feasible(lp, &x) {
                    *best = best.max(dot(&lp.c, &x));
                }
            }
            return;
        }
        for k in start..total {
            if total - k < n - chosen.len() {
                break;
            }
            chosen.push(k);
            visit(lp, k + 1, total, chosen, best);
            chosen.pop();
        }
    }
    visit(lp, 0, m + n, &mut chosen, &mut best);
    best
}

pub fn lp_quality(lp: &LpInstance, x: &[f64]) -> f64 {
    if !lp_feasible(lp, x) {
        return 0.0;
    }
    let optimal = lp_optimum(lp);
    let achieved = dot(&lp.c, x);
    if optimal <= 0.0 {
        return 1.0;
    }
    (achieved / optimal).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn both_system_solvers_reach_tolerance() {
        let d = Deadline::unlimited();
        for s in 0..5 {
            let sys = generate_system(40, &mut seeded(s));
            assert_eq!(system_quality(&sys, &gaussian_elimination(&sys, &d).unwrap()), 1.0);
            assert_eq!(system_quality(&sys, &kaczmarz(&sys, &mut seeded(s), &d).unwrap()), 1.0);
        }
    }

    #[test]
    fn system_checker_scores_injected_answers() {
        let sys = SystemInstance {
            a: vec![vec![2.0, 0.0], vec![0.0, 4.0]],
            b: vec![2.0, 4.0],
        };
        assert_eq!(system_quality(&sys, &[1.0, 1.0]), 1.0);
        assert!(system_quality(&sys, &[1.0, 1.001]) < 1e-4);
        assert_eq!(system_quality(&sys, &[1.0]), 0.0);
        assert_eq!(system_quality(&sys, &[f64::NAN, 1.0]), 0.0);
    }

    #[test]
    fn hand_built_lp_optimum() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6  ->  (1.6, 1.2), value 2.8
        let lp = LpInstance {
            c: vec![1.0, 1.0],
            a: vec![vec![1.0, 2.0], vec![3.0, 1.0]],
            b: vec![4.0, 6.0],
        };
        assert!((lp_optimum(&lp) - 2.8).abs() < 1e-12);
        assert!((lp_quality(&lp, &[1.6, 1.2]) - 1.0).abs() < 1e-12);
        assert!((lp_quality(&lp, &[0.0, 2.0]) - 2.0 / 2.8).abs() < 1e-12);
        assert_eq!(lp_quality(&lp, &[2.0, 2.0]), 0.0);
        assert_eq!(lp_quality(&lp, &[-1.0, 0.0]), 0.0);
        let x = simplex(&lp, &Deadline::unlimited()).unwrap();
        assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn simplex_matches_vertex_enumeration() {
        let d = Deadline::unlimited();
        for s in 0..20 {
            let lp = generate_lp(6, &mut seeded(s));
            let q = lp_quality(&lp, &simplex(&lp, &d).unwrap());
            assert!((q - 1.0).abs() < 1e-9, "{q}");
            let q = lp_quality(&lp, &interior_sampling(&lp, &mut seeded(s), &d).unwrap());
            assert!(q > 0.5 && q <= 1.0, "{q}");
        }
    }
}
