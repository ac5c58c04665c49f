//! Desk-scale problem suite.
//!
//! Ten problems, each with one systematic and one randomized solver. Every
//! problem has a seeded generator, a fixed-layout feature extractor and a
//! quality checker that does not reuse either solver's code. Quality is in
//! `[0, 1]` with 1 best; the per-problem definitions are documented on each
//! problem module.

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comb::FeatureVector;
use crate::error::{Error, Result};
use crate::rng::seeded;

pub mod features;
pub mod graphs;
pub mod integration;
pub mod knapsack;
pub mod linalg;
pub mod nonconvex;
pub mod sat;
pub mod sorting;

pub use features::{extract_features, FEATURE_DIM};

pub const DEFAULT_BUDGET: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Sorting,
    Graphs,
    LinearOpt,
    NonconvexOpt,
    IntegerOpt,
    SearchSat,
    Numerical,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Sorting,
        Category::Graphs,
        Category::LinearOpt,
        Category::NonconvexOpt,
        Category::IntegerOpt,
        Category::SearchSat,
        Category::Numerical,
    ];

    /// Slot of this category in the feature one-hot block.
    pub fn index(self) -> usize {
        Category::ALL.iter().position(|&c| c == self).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemId {
    Sorting,
    OrderStatistics,
    ShortestPath,
    Mst,
    LinearSystem,
    LinearProgram,
    Nonconvex,
    Knapsack,
    Sat,
    Integration,
}

impl ProblemId {
    pub const ALL: [ProblemId; 10] = [
        ProblemId::Sorting,
        ProblemId::OrderStatistics,
        ProblemId::ShortestPath,
        ProblemId::Mst,
        ProblemId::LinearSystem,
        ProblemId::LinearProgram,
        ProblemId::Nonconvex,
        ProblemId::Knapsack,
        ProblemId::Sat,
        ProblemId::Integration,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemId::Sorting => "sorting",
            ProblemId::OrderStatistics => "order-statistics",
            ProblemId::ShortestPath => "shortest-path",
            ProblemId::Mst => "mst",
            ProblemId::LinearSystem => "linear-system",
            ProblemId::LinearProgram => "linear-program",
            ProblemId::Nonconvex => "nonconvex",
            ProblemId::Knapsack => "knapsack",
            ProblemId::Sat => "sat",
            ProblemId::Integration => "integration",
        }
    }

    pub fn category(self) -> Category {
        match self {
            ProblemId::Sorting | ProblemId::OrderStatistics => Category::Sorting,
            ProblemId::ShortestPath | ProblemId::Mst => Category::Graphs,
            ProblemId::LinearProgram => Category::LinearOpt,
            ProblemId::Nonconvex => Category::NonconvexOpt,
            ProblemId::Knapsack => Category::IntegerOpt,
            ProblemId::Sat => Category::SearchSat,
            ProblemId::LinearSystem | ProblemId::Integration => Category::Numerical,
        }
    }

    /// Default-size [`ProblemSpec`] used by the benchmark matrix.
    pub fn default_spec(self, seed: u64) -> ProblemSpec {
        let (size, density) = match self {
            ProblemId::Sorting => (50_000, None),
            ProblemId::OrderStatistics => (50_000, None),
            ProblemId::ShortestPath => (300, Some(0.05)),
            ProblemId::Mst => (300, Some(0.05)),
            ProblemId::LinearSystem => (80, None),
            ProblemId::LinearProgram => (6, None),
            ProblemId::Nonconvex => (2, None),
            ProblemId::Knapsack => (40, None),
            ProblemId::Sat => (80, None),
            ProblemId::Integration => (8, None),
        };
        ProblemSpec {
            problem: self,
            size,
            density,
            seed,
        }
    }

    pub fn algorithm(self, style: Style) -> AlgorithmEntry {
        let name = match (self, style) {
            (ProblemId::Sorting, Style::Systematic) => "merge sort",
            (ProblemId::Sorting, Style::Randomized) => "random-pivot quicksort",
            (ProblemId::OrderStatistics, Style::Systematic) => "median-of-medians select",
            (ProblemId::OrderStatistics, Style::Randomized) => "quickselect",
            (ProblemId::ShortestPath, Style::Systematic) => "Dijkstra",
            (ProblemId::ShortestPath, Style::Randomized) => "random-restart greedy walk",
            (ProblemId::Mst, Style::Systematic) => "Kruskal",
            (ProblemId::Mst, Style::Randomized) => "random edge-sampling",
            (ProblemId::LinearSystem, Style::Systematic) => "Gaussian elimination with partial pivoting",
            (ProblemId::LinearSystem, Style::Randomized) => "randomized Kaczmarz",
            (ProblemId::LinearProgram, Style::Systematic) => "simplex with Bland's rule",
            (ProblemId::LinearProgram, Style::Randomized) => "random interior sampling with repair",
            (ProblemId::Nonconvex, Style::Systematic) => "grid search with local descent",
            (ProblemId::Nonconvex, Style::Randomized) => "simulated annealing",
            (ProblemId::Knapsack, Style::Systematic) => "capacity dynamic programming",
            (ProblemId::Knapsack, Style::Randomized) => "randomized greedy",
            (ProblemId::Sat, Style::Systematic) => "DPLL",
            (ProblemId::Sat, Style::Randomized) => "WalkSAT",
            (ProblemId::Integration, Style::Systematic) => "composite Simpson",
            (ProblemId::Integration, Style::Randomized) => "Monte Carlo",
        };
        AlgorithmEntry {
            id: format!("{}/{}", self.as_str(), style.as_str()),
            problem: self,
            style,
            name: name.to_string(),
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown problem id {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Style {
    Systematic,
    Randomized,
}

impl Style {
    pub fn as_str(self) -> &'static str {
        match self {
            Style::Systematic => "systematic",
            Style::Randomized => "randomized",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgorithmEntry {
    /// Registry id, `"problem/style"`.
    pub id: String,
    pub problem: ProblemId,
    pub style: Style,
    pub name: String,
}

impl FromStr for AlgorithmEntry {
    type Err = Error;

    fn from_str(id: &str) -> Result<Self> {
        let (problem, style) = id
            .split_once('/')
            .ok_or_else(|| Error::invalid(format!("algorithm id {id:?} is not of the form problem/style")))?;
        let style = match style {
            "systematic" => Style::Systematic,
            "randomized" => Style::Randomized,
            _ => return Err(Error::invalid(format!("unknown style in algorithm id {id:?}"))),
        };
        Ok(problem.parse::<ProblemId>()?.algorithm(style))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub problem: ProblemId,
    pub size: usize,
    /// Edge probability for the graph problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn category(&self) -> Category {
        self.problem.category()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ProblemSpec { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub problem: ProblemId,
    pub category: Category,
    pub template: ProblemSpec,
    pub systematic: AlgorithmEntry,
    pub randomized: AlgorithmEntry,
}

/// The fixed ten-problem roster with default-size [`ProblemSpec`] templates (seed 0).
pub fn suite_manifest() -> Vec<ManifestEntry> {
    ProblemId::ALL
        .into_iter()
        .map(|p| ManifestEntry {
            problem: p,
            category: p.category(),
            template: p.default_spec(0),
            systematic: p.algorithm(Style::Systematic),
            randomized: p.algorithm(Style::Randomized),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Payload {
    Sorting(sorting::SortInstance),
    OrderStatistics(sorting::SelectInstance),
    ShortestPath(graphs::PathInstance),
    Mst(graphs::Graph),
    LinearSystem(linalg::SystemInstance),
    LinearProgram(linalg::LpInstance),
    Nonconvex(nonconvex::RastriginInstance),
    Knapsack(knapsack::KnapsackInstance),
    Sat(sat::Formula),
    Integration(integration::Integrand),
}

impl Payload {
    pub fn problem(&self) -> ProblemId {
        match self {
            Payload::Sorting(_) => ProblemId::Sorting,
            Payload::OrderStatistics(_) => ProblemId::OrderStatistics,
            Payload::ShortestPath(_) => ProblemId::ShortestPath,
            Payload::Mst(_) => ProblemId::Mst,
            Payload::LinearSystem(_) => ProblemId::LinearSystem,
            Payload::LinearProgram(_) => ProblemId::LinearProgram,
            Payload::Nonconvex(_) => ProblemId::Nonconvex,
            Payload::Knapsack(_) => ProblemId::Knapsack,
            Payload::Sat(_) => ProblemId::Sat,
            Payload::Integration(_) => ProblemId::Integration,
        }
    }

    /// Natural size of the payload: elements, nodes, unknowns, items,
    /// variables or integrand terms.
    pub fn size(&self) -> usize {
        match self {
            Payload::Sorting(s) => s.values.len(),
            Payload::OrderStatistics(s) => s.values.len(),
            Payload::ShortestPath(p) => p.graph.nodes,
            Payload::Mst(g) => g.nodes,
            Payload::LinearSystem(s) => s.b.len(),
            Payload::LinearProgram(lp) => lp.c.len(),
            Payload::Nonconvex(r) => r.shift.len(),
            Payload::Knapsack(k) => k.weights.len(),
            Payload::Sat(f) => f.num_vars,
            Payload::Integration(i) => i.terms.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub problem: ProblemId,
    pub payload: Payload,
    pub features: FeatureVector,
}

impl ProblemInstance {
    pub fn size(&self) -> usize {
        self.payload.size()
    }

    /// Canonical byte encoding, used for determinism checks.
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).unwrap_or_default()
    }
}

/// Builds the instance described by `spec`; identical specs give identical
/// instances.
pub fn generate(spec: &ProblemSpec) -> Result<ProblemInstance> {
    if spec.size == 0 {
        return Err(Error::invalid("problem size must be positive"));
    }
    if let Some(d) = spec.density {
        if !(d > 0.0 && d <= 1.0) {
            return Err(Error::invalid(format!("density {d} outside (0, 1]")));
        }
    }
    let mut rng = seeded(spec.seed);
    let n = spec.size;
    let payload = match spec.problem {
        ProblemId::Sorting => Payload::Sorting(sorting::generate_sort(n, &mut rng)),
        ProblemId::OrderStatistics => Payload::OrderStatistics(sorting::generate_select(n, &mut rng)),
        ProblemId::ShortestPath => {
            Payload::ShortestPath(graphs::generate_path(n, spec.density.unwrap_or(0.05), &mut rng))
        }
        ProblemId::Mst => Payload::Mst(graphs::generate_graph(n, spec.density.unwrap_or(0.05), &mut rng)),
        ProblemId::LinearSystem => Payload::LinearSystem(linalg::generate_system(n, &mut rng)),
        ProblemId::LinearProgram => Payload::LinearProgram(linalg::generate_lp(n, &mut rng)),
        ProblemId::Nonconvex => Payload::Nonconvex(nonconvex::generate(n, &mut rng)),
        ProblemId::Knapsack => Payload::Knapsack(knapsack::generate(n, &mut rng)),
        ProblemId::Sat => Payload::Sat(sat::generate_planted(n, sat::DEFAULT_CLAUSE_RATIO, &mut rng)),
        ProblemId::Integration => Payload::Integration(integration::generate(n, &mut rng)),
    };
    Ok(from_payload(payload))
}

/// Wraps a payload into an instance with its features.
pub fn from_payload(payload: Payload) -> ProblemInstance {
    let features = extract_features(&payload);
    ProblemInstance {
        problem: payload.problem(),
        payload,
        features,
    }
}

/// What a solver returns, before checking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Answer {
    Sorted(Vec<i64>),
    Selected(i64),
    /// Node sequence from source to target, or `None` for "unreachable".
    Path(Option<Vec<usize>>),
    /// Indices into the graph's edge list.
    Forest(Vec<usize>),
    Vector(Vec<f64>),
    Items(Vec<usize>),
    /// A full assignment (index `v - 1` for variable `v`), or `None` for
    /// "unsatisfiable".
    Assignment(Option<Vec<bool>>),
    Scalar(f64),
}

impl Answer {
    pub fn summary(&self) -> String {
        match self {
            Answer::Sorted(v) => format!("sorted {} values", v.len()),
            Answer::Selected(x) => format!("selected {x}"),
            Answer::Path(Some(p)) => format!("path with {} nodes", p.len()),
            Answer::Path(None) => "no path".to_string(),
            Answer::Forest(e) => format!("forest with {} edges", e.len()),
            Answer::Vector(x) => format!("vector of length {}", x.len()),
            Answer::Items(i) => format!("{} items", i.len()),
            Answer::Assignment(Some(_)) => "assignment".to_string(),
            Answer::Assignment(None) => "unsatisfiable".to_string(),
            Answer::Scalar(x) => format!("value {x}"),
        }
    }
}

/// Wall-clock budget shared by a solver's inner loops.
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    start: Instant,
    budget: Duration,
}

/// Returned by a solver that ran out of time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Expired;

impl Deadline {
    pub fn new(budget: Duration) -> Self {
        Deadline {
            start: Instant::now(),
            budget,
        }
    }

    pub fn unlimited() -> Self {
        Deadline::new(Duration::MAX)
    }

    pub fn check(&self) -> Result<(), Expired> {
        if self.start.elapsed() > self.budget {
            Err(Expired)
        } else {
            Ok(())
        }
    }
}

/// Runs one solver on a matching payload.
pub fn run_solver<R: Rng + ?Sized>(
    entry: &AlgorithmEntry,
    payload: &Payload,
    rng: &mut R,
    deadline: &Deadline,
) -> Result<Result<Answer, Expired>> {
    use Style::*;
    if entry.problem != payload.problem() {
        return Err(Error::invalid(format!(
            "algorithm {} cannot solve a {} instance",
            entry.id,
            payload.problem()
        )));
    }
    let answer = match (payload, entry.style) {
        (Payload::Sorting(s), Systematic) => sorting::merge_sort(&s.values, deadline).map(Answer::Sorted),
        (Payload::Sorting(s), Randomized) => sorting::quicksort(&s.values, rng, deadline).map(Answer::Sorted),
        (Payload::OrderStatistics(s), Systematic) => {
            sorting::median_of_medians(&s.values, s.rank, deadline).map(Answer::Selected)
        }
        (Payload::OrderStatistics(s), Randomized) => {
            sorting::quickselect(&s.values, s.rank, rng, deadline).map(Answer::Selected)
        }
        (Payload::ShortestPath(p), Systematic) => graphs::dijkstra(p, deadline).map(Answer::Path),
        (Payload::ShortestPath(p), Randomized) => graphs::greedy_walk(p, rng, deadline).map(Answer::Path),
        (Payload::Mst(g), Systematic) => graphs::kruskal(g, deadline).map(Answer::Forest),
        (Payload::Mst(g), Randomized) => graphs::edge_sampling(g, rng, deadline).map(Answer::Forest),
        (Payload::LinearSystem(s), Systematic) => linalg::gaussian_elimination(s, deadline).map(Answer::Vector),
        (Payload::LinearSystem(s), Randomized) => linalg::kaczmarz(s, rng, deadline).map(Answer::Vector),
        (Payload::LinearProgram(lp), Systematic) => linalg::simplex(lp, deadline).map(Answer::Vector),
        (Payload::LinearProgram(lp), Randomized) => linalg::interior_sampling(lp, rng, deadline).map(Answer::Vector),
        (Payload::Nonconvex(r), Systematic) => nonconvex::grid_descent(r, deadline).map(Answer::Vector),
        (Payload::Nonconvex(r), Randomized) => nonconvex::annealing(r, rng, deadline).map(Answer::Vector),
        (Payload::Knapsack(k), Systematic) => knapsack::dynamic_program(k, deadline).map(Answer::Items),
        (Payload::Knapsack(k), Randomized) => knapsack::randomized_greedy(k, rng, deadline).map(Answer::Items),
        (Payload::Sat(f), Systematic) => sat::dpll(f, deadline).map(Answer::Assignment),
        (Payload::Sat(f), Randomized) => sat::walksat(f, rng, deadline).map(Answer::Assignment),
        (Payload::Integration(i), Systematic) => integration::simpson(i, deadline).map(Answer::Scalar),
        (Payload::Integration(i), Randomized) => integration::monte_carlo(i, rng, deadline).map(Answer::Scalar),
    };
    Ok(answer)
}

/// Scores an answer against the payload with the problem's checker.
pub fn quality(payload: &Payload, answer: &Answer) -> f64 {
    let q = match (payload, answer) {
        (Payload::Sorting(s), Answer::Sorted(v)) => sorting::sort_quality(&s.values, v),
        (Payload::OrderStatistics(s), Answer::Selected(x)) => sorting::select_quality(s, *x),
        (Payload::ShortestPath(p), Answer::Path(path)) => graphs::path_quality(p, path.as_deref()),
        (Payload::Mst(g), Answer::Forest(edges)) => graphs::forest_quality(g, edges),
        (Payload::LinearSystem(s), Answer::Vector(x)) => linalg::system_quality(s, x),
        (Payload::LinearProgram(lp), Answer::Vector(x)) => linalg::lp_quality(lp, x),
        (Payload::Nonconvex(r), Answer::Vector(x)) => nonconvex::quality(r, x),
        (Payload::Knapsack(k), Answer::Items(items)) => knapsack::quality(k, items),
        (Payload::Sat(f), Answer::Assignment(a)) => sat::quality(f, a.as_deref()),
        (Payload::Integration(i), Answer::Scalar(x)) => integration::quality(i, *x),
        _ => 0.0,
    };
    if q.is_finite() {
        q.clamp(0.0, 1.0)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub runtime_s: f64,
    pub quality: f64,
    pub timed_out: bool,
    pub summary: String,
}

/// Times one solve and scores it. The clock covers the solver call only.
/// Exceeding `budget` yields quality 0 with runtime equal to the budget.
pub fn solve<R: Rng + ?Sized>(
    entry: &AlgorithmEntry,
    instance: &ProblemInstance,
    rng: &mut R,
    budget: Duration,
) -> Result<SolveOutcome> {
    let deadline = Deadline::new(budget);
    let start = Instant::now();
    let answer = run_solver(entry, &instance.payload, rng, &deadline)?;
    let elapsed = start.elapsed();
    match answer {
        Ok(answer) if elapsed <= budget => Ok(SolveOutcome {
            runtime_s: elapsed.as_secs_f64(),
            quality: quality(&instance.payload, &answer),
            timed_out: false,
            summary: answer.summary(),
        }),
        _ => Ok(SolveOutcome {
            runtime_s: budget.as_secs_f64(),
            quality: 0.0,
            timed_out: true,
            summary: "time budget exhausted".to_string(),
        }),
    }
}

/// [`solve`] with panics converted into an error.
pub fn solve_guarded<R: Rng + ?Sized>(
    entry: &AlgorithmEntry,
    instance: &ProblemInstance,
    rng: &mut R,
    budget: Duration,
) -> Result<SolveOutcome> {
    match catch_unwind(AssertUnwindSafe(|| solve(entry, instance, rng, budget))) {
        Ok(r) => r,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "solver panicked".to_string());
            Err(Error::invalid(format!("{} panicked: {msg}", entry.id)))
        }
    }
}
