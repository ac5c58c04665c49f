//! Sorting and order statistics.
//!
//! Quality for both is exact: 1 for the correct output, 0 otherwise. The
//! checkers compare against the standard library sort.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Deadline, Expired};

const VALUE_RANGE: i64 = 1_000_000_000;
const SMALL: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortInstance {
    pub values: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectInstance {
    pub values: Vec<i64>,
    /// 0-based rank of the requested order statistic.
    pub rank: usize,
}

pub fn generate_sort<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SortInstance {
    SortInstance {
        values: (0..n).map(|_| rng.random_range(-VALUE_RANGE..=VALUE_RANGE)).collect(),
    }
}

/// Uniform values; the requested rank is the lower median.
pub fn generate_select<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SelectInstance {
    SelectInstance {
        values: (0..n).map(|_| rng.random_range(-VALUE_RANGE..=VALUE_RANGE)).collect(),
        rank: (n - 1) / 2,
    }
}

fn insertion_sort(v: &mut [i64]) {
    for i in 1..v.len() {
        let x = v[i];
        let mut j = i;
        while j > 0 && v[j - 1] > x {
            v[j] = v[j - 1];
            j -= 1;
        }
        v[j] = x;
    }
}

/// Bottom-up merge sort over insertion-sorted runs.
pub fn merge_sort(values: &[i64], deadline: &Deadline) -> Result<Vec<i64>, Expired> {
    let n = values.len();
    let mut a = values.to_vec();
    for run in a.chunks_mut(SMALL) {
        insertion_sort(run);
    }
    let mut b = vec![0i64; n];
    let mut width = SMALL;
    while width < n {
        deadline.check()?;
        for lo in (0..n).step_by(2 * width) {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j) = (lo, mid);
            for slot in &mut b[lo..hi] {
                if i < mid && (j >= hi || a[i] <= a[j]) {
                    *slot = a[i];
                    i += 1;
                } else {
                    *slot = a[j];
                    j += 1;
                }
            }
        }
        std::mem::swap(&mut a, &mut b);
        width *= 2;
    }
    deadline.check()?;
    Ok(a)
}

/// Three-way partition around `pivot`: returns `(lt, gt)` with
/// `v[..lt] < pivot`, `v[lt..gt] == pivot`, `v[gt..] > pivot`.
fn partition3(v: &mut [i64], pivot: i64) -> (usize, usize) {
    let (mut lt, mut i, mut gt) = (0, 0, v.len());
    while i < gt {
        if v[i] < pivot {
            v.swap(lt, i);
            lt += 1;
            i += 1;
        } else if v[i] > pivot {
            gt -= 1;
            v.swap(i, gt);
        } else {
            i += 1;
        }
    }
    (lt, gt)
}

/// Hoare partition around the value at `pivot`; returns `p` such that
/// `v[..=p] <= x <= v[p + 1..]` with both sides nonempty.
fn hoare(v: &mut [i64], pivot: usize) -> usize {
    v.swap(0, pivot);
    let x = v[0];
    let (mut i, mut j) = (0usize, v.len() - 1);
    loop {
        while v[i] < x {
            i += 1;
        }
        while v[j] > x {
            j -= 1;
        }
        if i >= j {
            return j;
        }
        v.swap(i, j);
        i += 1;
        j -= 1;
    }
}

/// Quicksort with uniformly random pivots and Hoare partitioning, recursing
/// on the smaller side.
pub fn quicksort<R: Rng + ?Sized>(values: &[i64], rng: &mut R, deadline: &Deadline) -> Result<Vec<i64>, Expired> {
    fn sort<R: Rng + ?Sized>(
        mut v: &mut [i64],
        rng: &mut R,
        deadline: &Deadline,
        calls: &mut u32,
    ) -> Result<(), Expired> {
        while v.len() > SMALL {
            *calls += 1;
            if calls.is_multiple_of(256) {
                deadline.check()?;
            }
            let p = hoare(v, rng.random_range(0..v.len()));
            let (left, right) = v.split_at_mut(p + 1);
            if left.len() < right.len() {
                sort(left, rng, deadline, calls)?;
                v = right;
            } else {
                sort(right, rng, deadline, calls)?;
                v = left;
            }
        }
        insertion_sort(v);
        Ok(())
    }
    let mut v = values.to_vec();
    let mut calls = 0;
    sort(&mut v, rng, deadline, &mut calls)?;
    deadline.check()?;
    Ok(v)
}

/// Deterministic linear-time selection (groups of five).
pub fn median_of_medians(values: &[i64], rank: usize, deadline: &Deadline) -> Result<i64, Expired> {
    fn select(mut v: Vec<i64>, mut k: usize, deadline: &Deadline) -> Result<i64, Expired> {
        loop {
            deadline.check()?;
            if v.len() <= SMALL {
                insertion_sort(&mut v);
                return Ok(v[k]);
            }
            let medians: Vec<i64> = v
                .chunks(5)
                .map(|c| {
                    let mut g = c.to_vec();
                    insertion_sort(&mut g);
                    g[(g.len() - 1) / 2]
                })
                .collect();
            let mid = (medians.len() - 1) / 2;
            let pivot = select(medians, mid, deadline)?;
            let (lt, gt) = partition3(&mut v, pivot);
            if k < lt {
                v.truncate(lt);
            } else if k < gt {
                return Ok(pivot);
            } else {
                v.drain(..gt);
                k -= gt;
            }
        }
    }
    select(values.to_vec(), rank, deadline)
}

/// Quickselect with uniformly random pivots.
pub fn quickselect<R: Rng + ?Sized>(
    values: &[i64],
    rank: usize,
    rng: &mut R,
    deadline: &Deadline,
) -> Result<i64, Expired> {
    let mut v = values.to_vec();
    let (mut lo, mut hi, mut k) = (0, v.len(), rank);
    loop {
        deadline.check()?;
        let slice = &mut v[lo..hi];
        if slice.len() <= SMALL {
            insertion_sort(slice);
            return Ok(slice[k]);
        }
        let pivot = slice[rng.random_range(0..slice.len())];
        let (lt, gt) = partition3(slice, pivot);
        if k < lt {
            hi = lo + lt;
        } else if k < gt {
            return Ok(pivot);
        } else {
            lo += gt;
            k -= gt;
        }
    }
}

pub fn sort_quality(input: &[i64], output: &[i64]) -> f64 {
    let mut expected = input.to_vec();
    expected.sort_unstable();
    if expected == output {
        1.0
    } else {
        0.0
    }
}

pub fn select_quality(instance: &SelectInstance, answer: i64) -> f64 {
    let mut sorted = instance.values.clone();
    sorted.sort_unstable();
    match sorted.get(instance.rank) {
        Some(&x) if x == answer => 1.0,
        _ => 0.0,
    }
}
