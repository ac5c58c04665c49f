//! Command-line front end: `run`, `analyze` and `simulate`.
//!
//! Settings resolve in three layers: built-in defaults, then the JSON file
//! given with `--config`, then command-line flags. The resolved settings are
//! written next to the outputs.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Error;
use crate::harness::{self, AnalysisConfig, AnalysisReport, MatrixConfig};
use crate::online::sim::{simulate_with_workers, SimulationConfig, SimulationKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_BOUND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "algoselect", version, about = "Comb-based algorithm selection experiments")]
pub struct Cli {
    /// JSON settings file for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "ALGOSELECT_OUT")]
    pub out: Option<PathBuf>,
    /// Base seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the run matrix and simulation sweeps.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the problem/algorithm matrix and write runs.jsonl.
    Run {
        #[arg(long)]
        reps: Option<usize>,
        /// Comma-separated problem ids.
        #[arg(long, value_delimiter = ',')]
        problems: Vec<String>,
        /// Per-run time budget in seconds.
        #[arg(long)]
        budget: Option<f64>,
        /// Run every algorithm on every problem.
        #[arg(long)]
        extended: bool,
        /// Exit with status 2 if any record is flagged.
        #[arg(long)]
        fail_on_flagged: bool,
    },
    /// Analyze a runs.jsonl file and write the report, heatmap and ratio tables.
    Analyze {
        /// Input JSONL; defaults to runs.jsonl in the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        resamples: Option<usize>,
        #[arg(long)]
        confidence: Option<f64>,
    },
    /// Run an online-selection simulation and write per-round ledgers.
    Simulate {
        /// fpl, cascade, adaptive-window or ucb-tree.
        name: Option<String>,
        #[arg(long = "T")]
        horizon: Option<usize>,
        #[arg(long = "K")]
        k: Option<usize>,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        depth: Option<u32>,
        /// Fixed FPL perturbation scale instead of the horizon-tuned one.
        #[arg(long)]
        scale: Option<f64>,
        /// Exit with status 3 if any replication exceeds the bound.
        #[arg(long)]
        assert_bounds: bool,
    },
}

/// A failure with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub status: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        status: EXIT_USAGE,
        message: message.into(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidArgument(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn load_layer(path: Option<&Path>) -> CliResult<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(usage(format!("config {} must be a JSON object", path.display()))),
        Err(e) => Err(usage(format!("config {} is not valid JSON: {e}", path.display()))),
    }
}

fn set<T: Serialize>(layer: &mut Map<String, Value>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        layer.insert(key.to_string(), serde_json::to_value(v).expect("flag values serialize"));
    }
}

fn resolve<T: DeserializeOwned>(layer: Map<String, Value>) -> CliResult<T> {
    serde_json::from_value(Value::Object(layer)).map_err(|e| usage(format!("invalid settings: {e}")))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn out_dir(cli: &Cli) -> CliResult<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn cmd_run(
    cli: &Cli,
    reps: Option<usize>,
    problems: &[String],
    budget: Option<f64>,
    extended: bool,
    fail_on_flagged: bool,
) -> CliResult {
    let mut layer = load_layer(cli.config.as_deref())?;
    set(&mut layer, "repetitions", reps);
    set(&mut layer, "base_seed", cli.seed);
    set(&mut layer, "workers", cli.workers);
    set(&mut layer, "budget_s", budget);
    if extended {
        set(&mut layer, "extended", Some(true));
    }
    if !problems.is_empty() {
        set(&mut layer, "problems", Some(problems));
    }
    let config: MatrixConfig = resolve(layer)?;
    config.validate()?;
    let dir = out_dir(cli)?;
    write_json(&dir.join("config.resolved.json"), &config)?;

    let path = dir.join("runs.jsonl");
    let mut out = BufWriter::new(File::create(&path)?);
    let records = harness::run_matrix(&config, |r| {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    })?;
    let flagged = records.iter().filter(|r| r.flagged).count();
    println!("{} records written to {}", records.len(), path.display());
    if flagged > 0 {
        println!("{flagged} record(s) flagged");
        if fail_on_flagged {
            return Err(Failure {
                status: EXIT_DATA,
                message: format!("{flagged} flagged record(s)"),
            });
        }
    }
    Ok(())
}

fn cmd_analyze(cli: &Cli, input: Option<&Path>, resamples: Option<usize>, confidence: Option<f64>) -> CliResult {
    let mut layer = load_layer(cli.config.as_deref())?;
    let input = match (input, layer.remove("input")) {
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(Value::String(p))) => Some(PathBuf::from(p)),
        (None, Some(_)) => return Err(usage("config key \"input\" must be a path string")),
        (None, None) => None,
    };
    set(&mut layer, "resamples", resamples);
    set(&mut layer, "confidence", confidence);
    set(&mut layer, "bootstrap_seed", cli.seed);
    let config: AnalysisConfig = resolve(layer)?;
    let dir = out_dir(cli)?;
    let input = input.unwrap_or_else(|| dir.join("runs.jsonl"));
    if !input.exists() {
        return Err(usage(format!("input {} does not exist", input.display())));
    }
    let records = harness::read_jsonl(&input)?;
    let report = AnalysisReport::build(&records, &config).map_err(|e| Failure {
        status: EXIT_DATA,
        message: format!("{}: {e}", input.display()),
    })?;

    write_json(
        &dir.join("analyze.resolved.json"),
        &serde_json::json!({ "input": input, "analysis": config }),
    )?;
    write_json(&dir.join("report.json"), &report)?;
    fs::write(dir.join("heatmap.csv"), harness::export_heatmap(&records).to_csv())?;
    let mut ratios = String::from("problem,algorithm,ratio\n");
    for p in &report.compatibility.per_problem {
        for (a, r) in &p.ratios {
            ratios.push_str(&format!("{},{a},{r}\n", p.problem));
        }
    }
    fs::write(dir.join("ratios.csv"), ratios)?;
    let mut hist = String::from("lo,hi,count\n");
    for b in &report.compatibility.ratio_histogram {
        let hi = b.hi.map(|h| h.to_string()).unwrap_or_default();
        hist.push_str(&format!("{},{hi},{}\n", b.lo, b.count));
    }
    fs::write(dir.join("ratio_histogram.csv"), hist)?;

    for (name, value) in report.summary_rows() {
        println!("{name}: {value}");
    }
    println!(
        "Conditional Entropy H(A|P): {:.3} bits",
        report.conditional_entropy_bits
    );
    println!(
        "Compatible Algorithms per Problem: {:.2}",
        report.compatibility.mean_compatible_per_problem
    );
    for p in &report.cv.excluded {
        println!("excluded: {p}");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    cli: &Cli,
    name: Option<&str>,
    horizon: Option<usize>,
    k: Option<usize>,
    seeds: Option<usize>,
    depth: Option<u32>,
    scale: Option<f64>,
    assert_bounds: bool,
) -> CliResult {
    let mut layer = load_layer(cli.config.as_deref())?;
    if let Some(name) = name {
        let kind = SimulationKind::parse(name).ok_or_else(|| {
            usage(format!(
                "unknown simulation {name:?}; expected fpl, cascade, adaptive-window or ucb-tree"
            ))
        })?;
        set(&mut layer, "simulation", Some(kind));
    }
    if !layer.contains_key("simulation") {
        return Err(usage("simulate needs a simulation name"));
    }
    set(&mut layer, "horizon", horizon);
    set(&mut layer, "K", k);
    set(&mut layer, "seed", cli.seed);
    set(&mut layer, "seeds", seeds);
    set(&mut layer, "depth", depth);
    set(&mut layer, "scale", scale);
    if !layer.contains_key("horizon") {
        layer.insert("horizon".into(), Value::from(1000));
    }
    let config: SimulationConfig = resolve(layer)?;
    let output = simulate_with_workers(&config, cli.workers.unwrap_or(1))?;

    let dir = out_dir(cli)?.join("simulate").join(config.simulation.name());
    fs::create_dir_all(&dir)?;
    write_json(&dir.join("simulate.resolved.json"), &config)?;
    for (i, ledger) in output.ledgers.iter().enumerate() {
        let file = BufWriter::new(File::create(dir.join(format!("ledger_{i:03}.csv")))?);
        ledger.write_csv(file)?;
    }
    write_json(&dir.join("summary.json"), &output.summary)?;

    let s = &output.summary;
    println!(
        "{}: T = {}, arms = {}, segments = {}, replications = {}",
        s.simulation.name(),
        s.horizon,
        s.arms,
        s.segments,
        s.runs.len()
    );
    println!("bound: {:.3} (constant {})", s.bound, s.bound_constant);
    println!("mean regret: {:.3}", s.mean_regret);
    println!("mean regret ratio: {:.4}", s.mean_ratio);
    println!("max regret ratio: {:.4}", s.max_ratio);
    println!("ledgers written to {}", dir.display());
    if assert_bounds && !s.within_bound() {
        return Err(Failure {
            status: EXIT_BOUND,
            message: format!("max regret ratio {:.4} exceeds 1", s.max_ratio),
        });
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Run {
            reps,
            problems,
            budget,
            extended,
            fail_on_flagged,
        } => cmd_run(cli, *reps, problems, *budget, *extended, *fail_on_flagged),
        Command::Analyze {
            input,
            resamples,
            confidence,
        } => cmd_analyze(cli, input.as_deref(), *resamples, *confidence),
        Command::Simulate {
            name,
            horizon,
            k,
            seeds,
            depth,
            scale,
            assert_bounds,
        } => cmd_simulate(
            cli,
            name.as_deref(),
            *horizon,
            *k,
            *seeds,
            *depth,
            *scale,
            *assert_bounds,
        ),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let status = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return status;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.status
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_layer() {
        let mut layer = Map::new();
        layer.insert("repetitions".into(), Value::from(3));
        layer.insert("base_seed".into(), Value::from(9));
        set(&mut layer, "repetitions", Some(5usize));
        set::<u64>(&mut layer, "base_seed", None);
        let cfg: MatrixConfig = resolve(layer).unwrap();
        assert_eq!(cfg.repetitions, 5);
        assert_eq!(cfg.base_seed, 9);
        assert_eq!(cfg.workers, 1);
    }

    #[test]
    fn unknown_settings_are_usage_errors() {
        let mut layer = Map::new();
        layer.insert("repetitionz".into(), Value::from(3));
        let err = resolve::<MatrixConfig>(layer).unwrap_err();
        assert_eq!(err.status, EXIT_USAGE);
    }

    #[test]
    fn error_statuses() {
        assert_eq!(Failure::from(Error::invalid("x")).status, EXIT_USAGE);
        let data = Error::Data {
            path: "f".into(),
            line: 3,
            message: "bad".into(),
        };
        assert_eq!(Failure::from(data).status, EXIT_DATA);
    }

    #[test]
    fn parse_simulate_flags() {
        let cli = Cli::try_parse_from([
            "algoselect",
            "simulate",
            "fpl",
            "--T",
            "1000",
            "--K",
            "2",
            "--seeds",
            "10",
        ])
        .unwrap();
        match cli.command {
            Command::Simulate {
                name,
                horizon,
                k,
                seeds,
                ..
            } => {
                assert_eq!(name.as_deref(), Some("fpl"));
                assert_eq!((horizon, k, seeds), (Some(1000), Some(2), Some(10)));
            }
            other => panic!("{other:?}"),
        }
    }
}
