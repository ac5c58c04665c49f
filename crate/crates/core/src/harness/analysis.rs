//! Analysis of a run matrix: cross-validated selection gaps, bootstrap
//! intervals, compatibility and runtime ratios, conditional entropy of the
//! winning algorithm and a runtime heatmap.
//!
//! Runtimes are clamped to [`RUNTIME_FLOOR`] before any ratio or logarithm.
//! An algorithm is compatible with a problem when its mean quality there
//! exceeds [`COMPATIBILITY_THRESHOLD`].

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::stats;

pub const RUNTIME_FLOOR: f64 = 1e-7;
pub const COMPATIBILITY_THRESHOLD: f64 = 0.5;
pub const HISTOGRAM_EDGES: [f64; 12] = [1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0];

fn clamp(runtime: f64) -> f64 {
    runtime.max(RUNTIME_FLOOR)
}

type Groups<'a> = BTreeMap<&'a str, BTreeMap<&'a str, Vec<&'a RunRecord>>>;

fn group(records: &[RunRecord]) -> Groups<'_> {
    let mut g: Groups<'_> = BTreeMap::new();
    for r in records {
        g.entry(r.problem.as_str())
            .or_default()
            .entry(r.algorithm.as_str())
            .or_default()
            .push(r);
    }
    g
}

fn mean_quality(runs: &[&RunRecord]) -> f64 {
    runs.iter().map(|r| r.quality).sum::<f64>() / runs.len() as f64
}

fn compatible<'a>(algorithms: &BTreeMap<&'a str, Vec<&'a RunRecord>>) -> Vec<&'a str> {
    algorithms
        .iter()
        .filter(|(_, runs)| mean_quality(runs) > COMPATIBILITY_THRESHOLD)
        .map(|(a, _)| *a)
        .collect()
}

/// Clamped runtime per repetition; duplicate repetitions are an error.
fn by_rep(problem: &str, algorithm: &str, runs: &[&RunRecord]) -> Result<BTreeMap<usize, f64>> {
    let mut map = BTreeMap::new();
    for r in runs {
        if map.insert(r.rep, clamp(r.runtime_s)).is_some() {
            return Err(Error::invalid(format!(
                "duplicate repetition {} for {problem} / {algorithm}",
                r.rep
            )));
        }
    }
    Ok(map)
}

fn require_repetitions(groups: &Groups<'_>) -> Result<()> {
    for (p, algorithms) in groups {
        for (a, runs) in algorithms {
            if runs.len() < 2 {
                return Err(Error::invalid(format!(
                    "{p} / {a} has {} record(s); at least 2 repetitions are required",
                    runs.len()
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub held_out_rep: usize,
    pub predicted: String,
    pub best: String,
    pub gap_abs: f64,
    pub gap_relative_pct: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemGap {
    pub problem: String,
    pub compatible: Vec<String>,
    pub folds: Vec<Fold>,
    pub mean_gap_abs: f64,
    pub median_gap_relative_pct: f64,
    pub geometric_mean_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvAnalysis {
    pub problems: Vec<ProblemGap>,
    /// Problems without a compatible algorithm.
    pub excluded: Vec<String>,
    /// Mean over problems of the per-problem mean absolute gap.
    pub mean_gap_abs: f64,
    /// Median over problems of the per-problem median relative gap.
    pub median_relative_improvement_pct: f64,
    /// Geometric mean over problems of the per-problem geometric-mean ratio.
    pub geometric_mean_ratio: f64,
}

/// Leave-one-repetition-out evaluation of the median-runtime predictor.
///
/// For each held-out repetition the predictor picks the compatible algorithm
/// with the lowest median runtime on the remaining repetitions; it is scored
/// against the compatible algorithm that was fastest on the held-out one.
/// Ties go to the lexicographically smaller algorithm id.
pub fn cv_gap_analysis(records: &[RunRecord]) -> Result<CvAnalysis> {
    let groups = group(records);
    require_repetitions(&groups)?;
    let mut problems = Vec::new();
    let mut excluded = Vec::new();
    for (p, algorithms) in &groups {
        let compat = compatible(algorithms);
        if compat.is_empty() {
            excluded.push(p.to_string());
            continue;
        }
        let runtimes: Vec<BTreeMap<usize, f64>> = compat
            .iter()
            .map(|a| by_rep(p, a, &algorithms[a]))
            .collect::<Result<_>>()?;
        let common: Vec<usize> = runtimes[0]
            .keys()
            .copied()
            .filter(|rep| runtimes.iter().all(|m| m.contains_key(rep)))
            .collect();
        if common.len() < 2 {
            return Err(Error::invalid(format!(
                "{p}: fewer than 2 repetitions shared by its compatible algorithms"
            )));
        }
        let mut folds = Vec::with_capacity(common.len());
        for &held in &common {
            let predicted = (0..compat.len())
                .map(|i| {
                    let train: Vec<f64> = runtimes[i]
                        .iter()
                        .filter(|(r, _)| **r != held)
                        .map(|(_, t)| *t)
                        .collect();
                    (stats::median(&train), i)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, i)| i)
                .unwrap_or(0);
            let best = (0..compat.len())
                .min_by(|&a, &b| runtimes[a][&held].total_cmp(&runtimes[b][&held]).then(a.cmp(&b)))
                .unwrap_or(0);
            let (tp, tb) = (runtimes[predicted][&held], runtimes[best][&held]);
            folds.push(Fold {
                held_out_rep: held,
                predicted: compat[predicted].to_string(),
                best: compat[best].to_string(),
                gap_abs: tp - tb,
                gap_relative_pct: 100.0 * (tp - tb) / tb,
                ratio: tp / tb,
            });
        }
        let gaps: Vec<f64> = folds.iter().map(|f| f.gap_abs).collect();
        let rel: Vec<f64> = folds.iter().map(|f| f.gap_relative_pct).collect();
        let ratios: Vec<f64> = folds.iter().map(|f| f.ratio).collect();
        problems.push(ProblemGap {
            problem: p.to_string(),
            compatible: compat.iter().map(|a| a.to_string()).collect(),
            mean_gap_abs: stats::mean(&gaps),
            median_gap_relative_pct: stats::median(&rel),
            geometric_mean_ratio: stats::geometric_mean(&ratios),
            folds,
        });
    }
    if problems.is_empty() {
        return Err(Error::invalid("no problem has a compatible algorithm"));
    }
    let per_mean: Vec<f64> = problems.iter().map(|g| g.mean_gap_abs).collect();
    let per_rel: Vec<f64> = problems.iter().map(|g| g.median_gap_relative_pct).collect();
    let per_ratio: Vec<f64> = problems.iter().map(|g| g.geometric_mean_ratio).collect();
    Ok(CvAnalysis {
        mean_gap_abs: stats::mean(&per_mean),
        median_relative_improvement_pct: stats::median(&per_rel),
        geometric_mean_ratio: stats::geometric_mean(&per_ratio),
        problems,
        excluded,
    })
}

/// Percentile bootstrap interval for the mean of `gaps`.
///
/// Each resample draws `gaps.len()` indices with `rng.random_range`, in
/// order, and averages the selected gaps.
pub fn bootstrap_ci<R: Rng + ?Sized>(
    gaps: &[f64],
    resamples: usize,
    confidence: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if gaps.len() < 2 {
        return Err(Error::invalid("bootstrap needs at least 2 gap values"));
    }
    if resamples < 1000 {
        return Err(Error::invalid("bootstrap needs at least 1000 resamples"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!("confidence {confidence} outside (0, 1)")));
    }
    let n = gaps.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| gaps[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - confidence) / 2.0;
    Ok((
        stats::quantile_sorted(&means, alpha),
        stats::quantile_sorted(&means, 1.0 - alpha),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemEntropy {
    pub problem: String,
    pub bits: f64,
    /// Repetitions won per compatible algorithm.
    pub wins: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyAnalysis {
    pub per_problem: Vec<ProblemEntropy>,
    pub excluded: Vec<String>,
    /// Mean over problems of `H(A | p)`, in bits.
    pub mean_bits: f64,
}

/// Entropy in bits of a distribution given by counts, with `0 log 0 = 0`.
pub fn entropy_bits(counts: impl IntoIterator<Item = usize>) -> f64 {
    let counts: Vec<usize> = counts.into_iter().collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Conditional entropy of the per-repetition winner given the problem.
///
/// In each repetition the winner is the fastest compatible algorithm that has
/// a record for it. Problems without a compatible algorithm are excluded and
/// listed.
pub fn conditional_entropy(records: &[RunRecord]) -> Result<EntropyAnalysis> {
    let groups = group(records);
    require_repetitions(&groups)?;
    let mut per_problem = Vec::new();
    let mut excluded = Vec::new();
    for (p, algorithms) in &groups {
        let compat = compatible(algorithms);
        if compat.is_empty() {
            excluded.push(p.to_string());
            continue;
        }
        let runtimes: Vec<BTreeMap<usize, f64>> = compat
            .iter()
            .map(|a| by_rep(p, a, &algorithms[a]))
            .collect::<Result<_>>()?;
        let mut reps: Vec<usize> = runtimes.iter().flat_map(|m| m.keys().copied()).collect();
        reps.sort_unstable();
        reps.dedup();
        let mut wins: BTreeMap<String, usize> = compat.iter().map(|a| (a.to_string(), 0)).collect();
        for rep in reps {
            let winner = (0..compat.len())
                .filter_map(|i| runtimes[i].get(&rep).map(|t| (*t, i)))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if let Some((_, i)) = winner {
                *wins.entry(compat[i].to_string()).or_default() += 1;
            }
        }
        per_problem.push(ProblemEntropy {
            problem: p.to_string(),
            bits: entropy_bits(wins.values().copied()),
            wins,
        });
    }
    let bits: Vec<f64> = per_problem.iter().map(|e| e.bits).collect();
    Ok(EntropyAnalysis {
        mean_bits: if bits.is_empty() { 0.0 } else { stats::mean(&bits) },
        per_problem,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemCompatibility {
    pub problem: String,
    pub algorithms_run: usize,
    pub compatible: Vec<String>,
    /// Mean runtime over the best compatible mean runtime.
    pub ratios: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBucket {
    pub lo: f64,
    /// Exclusive upper edge; `None` for the open last bucket.
    pub hi: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityAnalysis {
    pub per_problem: Vec<ProblemCompatibility>,
    pub mean_compatible_per_problem: f64,
    /// Fraction of the (problem, algorithm) pairs run that are not compatible.
    pub incompatible_fraction: f64,
    pub ratio_histogram: Vec<HistogramBucket>,
}

pub fn histogram(ratios: impl IntoIterator<Item = f64>) -> Vec<HistogramBucket> {
    let mut buckets: Vec<HistogramBucket> = HISTOGRAM_EDGES
        .iter()
        .enumerate()
        .map(|(i, &lo)| HistogramBucket {
            lo,
            hi: HISTOGRAM_EDGES.get(i + 1).copied(),
            count: 0,
        })
        .collect();
    for r in ratios {
        if let Some(b) = buckets.iter_mut().rev().find(|b| r >= b.lo) {
            b.count += 1;
        }
    }
    buckets
}

pub fn compatibility_and_ratios(records: &[RunRecord]) -> Result<CompatibilityAnalysis> {
    if records.is_empty() {
        return Err(Error::invalid("no run records"));
    }
    let groups = group(records);
    let mut per_problem = Vec::new();
    let mut pairs = 0;
    let mut compatible_pairs = 0;
    for (p, algorithms) in &groups {
        let compat = compatible(algorithms);
        let means: BTreeMap<&str, f64> = compat
            .iter()
            .map(|a| {
                let rts: Vec<f64> = algorithms[a].iter().map(|r| clamp(r.runtime_s)).collect();
                (*a, stats::mean(&rts))
            })
            .collect();
        let best = means.values().copied().fold(f64::INFINITY, f64::min);
        pairs += algorithms.len();
        compatible_pairs += compat.len();
        per_problem.push(ProblemCompatibility {
            problem: p.to_string(),
            algorithms_run: algorithms.len(),
            compatible: compat.iter().map(|a| a.to_string()).collect(),
            ratios: means.iter().map(|(a, m)| (a.to_string(), m / best)).collect(),
        });
    }
    let ratio_histogram = histogram(per_problem.iter().flat_map(|c| c.ratios.values().copied()));
    Ok(CompatibilityAnalysis {
        mean_compatible_per_problem: compatible_pairs as f64 / per_problem.len() as f64,
        incompatible_fraction: 1.0 - compatible_pairs as f64 / pairs as f64,
        ratio_histogram,
        per_problem,
    })
}

/// Mean `log10` runtime per (problem, algorithm). A cell is `None` when the
/// pair was not run or every one of its records is flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub problems: Vec<String>,
    pub algorithms: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl Heatmap {
    pub fn non_blank(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_some()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("problem");
        for a in &self.algorithms {
            out.push(',');
            out.push_str(a);
        }
        out.push('\n');
        for (p, row) in self.problems.iter().zip(&self.cells) {
            out.push_str(p);
            for c in row {
                out.push(',');
                if let Some(v) = c {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn export_heatmap(records: &[RunRecord]) -> Heatmap {
    let groups = group(records);
    let mut algorithms: Vec<String> = records.iter().map(|r| r.algorithm.clone()).collect();
    algorithms.sort();
    algorithms.dedup();
    let problems: Vec<String> = groups.keys().map(|p| p.to_string()).collect();
    let cells = groups
        .values()
        .map(|row| {
            algorithms
                .iter()
                .map(|a| {
                    let logs: Vec<f64> = row
                        .get(a.as_str())?
                        .iter()
                        .filter(|r| !r.flagged)
                        .map(|r| clamp(r.runtime_s).log10())
                        .collect();
                    (!logs.is_empty()).then(|| stats::mean(&logs))
                })
                .collect()
        })
        .collect();
    Heatmap {
        problems,
        algorithms,
        cells,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemStats {
    pub problem: String,
    pub runs: usize,
    pub mean_runtime: f64,
    pub std_runtime: f64,
    pub min_runtime: f64,
    pub max_runtime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmStats {
    pub algorithm: String,
    pub runs: usize,
    pub mean_runtime: f64,
    pub median_runtime: f64,
    pub std_runtime: f64,
    pub mean_quality: f64,
}

fn problem_stats(records: &[RunRecord]) -> Vec<ProblemStats> {
    let mut by: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.flagged) {
        by.entry(&r.problem).or_default().push(clamp(r.runtime_s));
    }
    by.into_iter()
        .map(|(p, rts)| ProblemStats {
            problem: p.to_string(),
            runs: rts.len(),
            mean_runtime: stats::mean(&rts),
            std_runtime: stats::std_dev(&rts),
            min_runtime: rts.iter().copied().fold(f64::INFINITY, f64::min),
            max_runtime: rts.iter().copied().fold(0.0, f64::max),
        })
        .collect()
}

fn algorithm_stats(records: &[RunRecord]) -> Vec<AlgorithmStats> {
    let mut by: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by.entry(&r.algorithm).or_default().push(r);
    }
    by.into_iter()
        .filter_map(|(a, runs)| {
            let rts: Vec<f64> = runs.iter().filter(|r| !r.flagged).map(|r| clamp(r.runtime_s)).collect();
            (!rts.is_empty()).then(|| AlgorithmStats {
                algorithm: a.to_string(),
                runs: rts.len(),
                mean_runtime: stats::mean(&rts),
                median_runtime: stats::median(&rts),
                std_runtime: stats::std_dev(&rts),
                mean_quality: mean_quality(&runs),
            })
        })
        .collect()
}

fn range(values: impl IntoIterator<Item = f64>) -> [f64; 2] {
    let values: Vec<f64> = values.into_iter().collect();
    if values.is_empty() {
        return [0.0, 0.0];
    }
    [
        values.iter().copied().fold(f64::INFINITY, f64::min),
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub resamples: usize,
    pub confidence: f64,
    pub bootstrap_seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            resamples: 10_000,
            confidence: 0.95,
            bootstrap_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub total_problems: usize,
    pub total_algorithms: usize,
    pub total_observations: usize,
    pub flagged_records: usize,
    pub non_finite_runtimes: usize,
    pub problem_stats: Vec<ProblemStats>,
    pub algorithm_stats: Vec<AlgorithmStats>,
    /// Smallest and largest per-problem mean runtime.
    pub difficulty_range: [f64; 2],
    /// Smallest and largest per-algorithm mean runtime.
    pub speed_range: [f64; 2],
    pub cv: CvAnalysis,
    pub cv_gap_abs: f64,
    pub cv_gap_relative_pct: f64,
    pub geometric_mean_ratio: f64,
    /// Interval for the mean absolute gap over problems; absent with fewer
    /// than two analyzed problems.
    pub bootstrap_ci: Option<[f64; 2]>,
    pub bootstrap: AnalysisConfig,
    pub compatibility: CompatibilityAnalysis,
    pub conditional_entropy_bits: f64,
    pub entropy: EntropyAnalysis,
    pub notes: Vec<String>,
}

impl AnalysisReport {
    pub fn build(records: &[RunRecord], config: &AnalysisConfig) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("no run records"));
        }
        let cv = cv_gap_analysis(records)?;
        let gaps: Vec<f64> = cv.problems.iter().map(|g| g.mean_gap_abs).collect();
        let bootstrap_ci = if gaps.len() >= 2 {
            let mut rng = seeded(config.bootstrap_seed);
            let (lo, hi) = bootstrap_ci(&gaps, config.resamples, config.confidence, &mut rng)?;
            Some([lo, hi])
        } else {
            None
        };
        let entropy = conditional_entropy(records)?;
        let compatibility = compatibility_and_ratios(records)?;
        let problem_stats = problem_stats(records);
        let algorithm_stats = algorithm_stats(records);
        let mut algorithms: Vec<&str> = records.iter().map(|r| r.algorithm.as_str()).collect();
        algorithms.sort_unstable();
        algorithms.dedup();
        let mut notes = vec![
            "median relative improvement is the median over problems of each problem's median fold gap".to_string(),
            "folds leave one repetition out; the predictor picks the lowest training-median runtime".to_string(),
        ];
        for p in &cv.excluded {
            notes.push(format!("{p} excluded: no algorithm with mean quality above 0.5"));
        }
        Ok(AnalysisReport {
            total_problems: group(records).len(),
            total_algorithms: algorithms.len(),
            total_observations: records.len(),
            flagged_records: records.iter().filter(|r| r.flagged).count(),
            non_finite_runtimes: records.iter().filter(|r| !r.runtime_s.is_finite()).count(),
            difficulty_range: range(problem_stats.iter().map(|s| s.mean_runtime)),
            speed_range: range(algorithm_stats.iter().map(|s| s.mean_runtime)),
            problem_stats,
            algorithm_stats,
            cv_gap_abs: cv.mean_gap_abs,
            cv_gap_relative_pct: cv.median_relative_improvement_pct,
            geometric_mean_ratio: cv.geometric_mean_ratio,
            cv,
            bootstrap_ci,
            bootstrap: config.clone(),
            conditional_entropy_bits: entropy.mean_bits,
            entropy,
            compatibility,
            notes,
        })
    }

    /// Summary rows, labelled as in the usual summary table.
    pub fn summary_rows(&self) -> Vec<(&'static str, String)> {
        let ci = match self.bootstrap_ci {
            Some([lo, hi]) => format!("[{lo:.6} s, {hi:.6} s]"),
            None => "n/a (fewer than 2 problems)".to_string(),
        };
        vec![
            ("Total Problems Analyzed", self.total_problems.to_string()),
            ("Total Algorithms Tested", self.total_algorithms.to_string()),
            (
                "Total Experiments Run (Observations)",
                self.total_observations.to_string(),
            ),
            (
                "Mean Absolute CV Gap (Median Predictor)",
                format!("{:.6} s", self.cv_gap_abs),
            ),
            (
                "Median Relative Improvement Potential",
                format!("{:.1}%", self.cv_gap_relative_pct),
            ),
            (
                "Geometric Mean Performance Ratio (Predicted vs. Best)",
                format!("{:.2}x", self.geometric_mean_ratio),
            ),
            (
                "Problem Difficulty Range (Mean Runtime)",
                format!("{:.6} s to {:.6} s", self.difficulty_range[0], self.difficulty_range[1]),
            ),
            (
                "Algorithm Speed Range (Mean Runtime)",
                format!("{:.6} s to {:.6} s", self.speed_range[0], self.speed_range[1]),
            ),
            ("95% CI for Absolute CV Gap (Bootstrap)", ci),
        ]
    }
}
