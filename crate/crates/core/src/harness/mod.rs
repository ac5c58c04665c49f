//! Benchmark matrix execution and analysis.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::suite::{self, AlgorithmEntry, ProblemId, Style};

pub mod analysis;

pub use analysis::{
    bootstrap_ci, compatibility_and_ratios, conditional_entropy, cv_gap_analysis, export_heatmap, AnalysisConfig,
    AnalysisReport,
};

/// One solver run. Serialized with exactly these keys, one record per JSONL
/// line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub problem: String,
    pub algorithm: String,
    pub rep: usize,
    pub seed: u64,
    pub runtime_s: f64,
    pub quality: f64,
    pub features: Vec<f64>,
    pub flagged: bool,
}

impl RunRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.runtime_s.is_finite() && self.runtime_s >= 0.0) {
            return Err(Error::invalid(format!(
                "runtime {} is not finite and nonnegative",
                self.runtime_s
            )));
        }
        if !(0.0..=1.0).contains(&self.quality) {
            return Err(Error::invalid(format!("quality {} outside [0, 1]", self.quality)));
        }
        if self.features.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        Ok(())
    }
}

fn default_repetitions() -> usize {
    7
}

fn default_budget() -> f64 {
    suite::DEFAULT_BUDGET.as_secs_f64()
}

fn default_workers() -> usize {
    1
}

fn all_problems() -> Vec<ProblemId> {
    ProblemId::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    #[serde(default = "all_problems")]
    pub problems: Vec<ProblemId>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_budget")]
    pub budget_s: f64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Run every selected algorithm on every selected problem.
    #[serde(default)]
    pub extended: bool,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig {
            problems: all_problems(),
            repetitions: default_repetitions(),
            base_seed: 0,
            budget_s: default_budget(),
            workers: default_workers(),
            extended: false,
        }
    }
}

impl MatrixConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if !(self.budget_s.is_finite() && self.budget_s > 0.0) {
            return Err(Error::invalid("time budget must be positive"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        if self.problems.is_empty() {
            return Err(Error::invalid("no problems selected"));
        }
        Ok(())
    }

    fn algorithms(&self) -> Vec<AlgorithmEntry> {
        self.problems
            .iter()
            .flat_map(|p| [p.algorithm(Style::Systematic), p.algorithm(Style::Randomized)])
            .collect()
    }

    /// Cells in matrix order: problem, then algorithm, then repetition.
    pub fn cells(&self) -> Vec<(ProblemId, AlgorithmEntry, usize)> {
        let algorithms = self.algorithms();
        let mut cells = Vec::new();
        for &p in &self.problems {
            for a in algorithms.iter().filter(|a| self.extended || a.problem == p) {
                for rep in 0..self.repetitions {
                    cells.push((p, a.clone(), rep));
                }
            }
        }
        cells
    }
}

/// Seed of a matrix cell; it seeds the instance generator, and the solver's
/// random source is derived from it.
pub fn cell_seed(base: u64, problem: &str, algorithm: &str, rep: usize) -> u64 {
    derive_seed(base, &[problem, algorithm, &rep.to_string()])
}

/// Generates, solves and scores a single cell. Never fails: solver errors and
/// panics become flagged records with quality 0 and runtime equal to the
/// budget; a solver that cannot handle the problem (extended mode) gives a
/// flagged record with runtime 0.
pub fn run_cell(
    problem: ProblemId,
    algorithm: &AlgorithmEntry,
    rep: usize,
    base_seed: u64,
    budget: Duration,
) -> RunRecord {
    let seed = cell_seed(base_seed, problem.as_str(), &algorithm.id, rep);
    let spec = problem.default_spec(seed);
    let mut record = RunRecord {
        problem: problem.as_str().to_string(),
        algorithm: algorithm.id.clone(),
        rep,
        seed,
        runtime_s: budget.as_secs_f64(),
        quality: 0.0,
        features: Vec::new(),
        flagged: true,
    };
    let Ok(instance) = suite::generate(&spec) else {
        return record;
    };
    record.features = instance.features.values().to_vec();
    if algorithm.problem != problem {
        record.runtime_s = 0.0;
        return record;
    }
    let mut rng = seeded(derive_seed(seed, &["solver"]));
    if let Ok(outcome) = suite::solve_guarded(algorithm, &instance, &mut rng, budget) {
        record.runtime_s = outcome.runtime_s;
        record.quality = outcome.quality;
        record.flagged = false;
    }
    record
}

/// Runs the configured matrix, handing each record to `sink` as soon as it
/// is available. With more than one worker, cells run on scoped threads and
/// the calling thread is the only one writing to `sink`; the returned records
/// are always in matrix order.
pub fn run_matrix(config: &MatrixConfig, mut sink: impl FnMut(&RunRecord) -> Result<()>) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let cells = config.cells();
    let budget = Duration::from_secs_f64(config.budget_s);
    if config.workers == 1 {
        let mut records = Vec::with_capacity(cells.len());
        for (p, a, rep) in &cells {
            let r = run_cell(*p, a, *rep, config.base_seed, budget);
            sink(&r)?;
            records.push(r);
        }
        return Ok(records);
    }

    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<RunRecord>> = vec![None; cells.len()];
    let (tx, rx) = mpsc::channel::<(usize, RunRecord)>();
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..config.workers.min(cells.len()) {
            let tx = tx.clone();
            let (next, cells) = (&next, &cells);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((p, a, rep)) = cells.get(i) else { break };
                let r = run_cell(*p, a, *rep, config.base_seed, budget);
                if tx.send((i, r)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, r) in rx {
            sink(&r)?;
            slots[i] = Some(r);
        }
        Ok(())
    })?;
    Ok(slots.into_iter().flatten().collect())
}

pub fn write_jsonl<W: Write>(records: &[RunRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads and validates a JSONL file. Blank lines are skipped; the first bad
/// line is reported with its 1-based number.
pub fn read_jsonl(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let data_error = |message: String| Error::Data {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let record: RunRecord = serde_json::from_str(&line).map_err(|e| data_error(e.to_string()))?;
        record.validate().map_err(|e| data_error(e.to_string()))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Data {
            path: path.to_path_buf(),
            line: 0,
            message: "no run records".to_string(),
        });
    }
    Ok(records)
}
