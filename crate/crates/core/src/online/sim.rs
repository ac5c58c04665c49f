//! Seeded Monte-Carlo simulations of the online selectors.

use serde::{Deserialize, Serialize};

use super::env::Environment;
use super::fpl::{tuned_scale, LossVector};
use super::ledger::RegretLedger;
use super::ucb::{cascade_choose, ucb1_choose, ucb_tree_route, UcbArm, UcbTree};
use super::window::{adaptive_window_run, fpl_run};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulationKind {
    Fpl,
    Cascade,
    AdaptiveWindow,
    UcbTree,
}

impl SimulationKind {
    pub fn name(self) -> &'static str {
        match self {
            SimulationKind::Fpl => "fpl",
            SimulationKind::Cascade => "cascade",
            SimulationKind::AdaptiveWindow => "adaptive-window",
            SimulationKind::UcbTree => "ucb-tree",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            SimulationKind::Fpl,
            SimulationKind::Cascade,
            SimulationKind::AdaptiveWindow,
            SimulationKind::UcbTree,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }

    /// Constant multiplying the rate in the reported bound.
    pub fn bound_constant(self) -> f64 {
        match self {
            SimulationKind::Fpl | SimulationKind::AdaptiveWindow => 8.0,
            SimulationKind::Cascade | SimulationKind::UcbTree => 3.0,
        }
    }
}

fn default_k() -> usize {
    2
}

fn default_seeds() -> usize {
    1
}

fn default_depth() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub simulation: SimulationKind,
    pub horizon: usize,
    #[serde(rename = "K", alias = "k", default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_depth")]
    pub depth: u32,
    /// FPL perturbation scale; `None` tunes it to the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Per-arm costs for the cascade, nondecreasing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<Environment>,
}

impl SimulationConfig {
    pub fn new(simulation: SimulationKind, horizon: usize) -> Self {
        SimulationConfig {
            simulation,
            horizon,
            k: default_k(),
            seed: 0,
            seeds: default_seeds(),
            depth: default_depth(),
            scale: None,
            costs: None,
            environment: None,
        }
    }

    /// The configured environment, or the simulation's default one.
    pub fn resolved_environment(&self) -> Environment {
        if let Some(env) = &self.environment {
            return env.clone();
        }
        match self.simulation {
            SimulationKind::Fpl => Environment::NearTie,
            SimulationKind::AdaptiveWindow => Environment::Flip { at: 0.5 },
            SimulationKind::Cascade => Environment::Bernoulli { means: vec![0.3, 0.0] },
            SimulationKind::UcbTree => {
                let mut losses = vec![1.0; 1usize << self.depth.min(20)];
                losses[0] = 0.0;
                Environment::Constant { losses }
            }
        }
    }

    pub fn resolved_costs(&self, arms: usize) -> Vec<f64> {
        match &self.costs {
            Some(c) => c.clone(),
            None if self.environment.is_none() && self.simulation == SimulationKind::Cascade => {
                vec![0.0, 10.0]
            }
            None => vec![0.0; arms],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub regret: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_regret: Option<f64>,
    /// Mean incurred loss per round (cost-plus-loss for the cascade).
    pub time_average_loss: f64,
    /// Regret of the non-restarting FPL on the same stream (adaptive window).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_regret: Option<f64>,
    /// `expected_regret` when available, otherwise `regret`, over `bound`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub simulation: SimulationKind,
    pub horizon: usize,
    pub arms: usize,
    pub segments: usize,
    pub bound_constant: f64,
    pub bound: f64,
    pub mean_regret: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    pub runs: Vec<SeedResult>,
}

impl SimulationSummary {
    pub fn within_bound(&self) -> bool {
        self.max_ratio <= 1.0
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub summary: SimulationSummary,
    pub ledgers: Vec<RegretLedger>,
}

/// Rate term of the bound, without the constant.
pub fn bound_rate(
    kind: SimulationKind,
    horizon: usize,
    arms: usize,
    segments: usize,
    depth: u32,
    cost_span: f64,
) -> f64 {
    let t = horizon as f64;
    let ln_t = (horizon.max(2) as f64).ln();
    let ln_k = (arms.max(2) as f64).ln();
    match kind {
        SimulationKind::Fpl => (t * ln_k).sqrt(),
        SimulationKind::AdaptiveWindow => (t * segments.max(1) as f64 * ln_k).sqrt(),
        SimulationKind::UcbTree => depth.max(1) as f64 * (t * ln_t).sqrt(),
        SimulationKind::Cascade => (1.0 + cost_span) * (arms as f64 * t * ln_t).sqrt(),
    }
}

/// UCB1 with bandit feedback over a full-information stream; only the chosen
/// arm's loss is revealed to the selector.
pub fn ucb1_run(stream: &[LossVector]) -> Result<RegretLedger> {
    let k = stream
        .first()
        .map(|l| l.len())
        .ok_or_else(|| Error::invalid("loss stream is empty"))?;
    let mut arms = vec![UcbArm::new(0.0); k];
    let mut ledger = RegretLedger::new(k, &[])?;
    for (t, losses) in stream.iter().enumerate() {
        let a = ucb1_choose(&arms, t as u64 + 1)?;
        ledger.record(a, losses.values(), None)?;
        arms[a].record(losses.values()[a])?;
    }
    Ok(ledger)
}

/// UCB gate tree over `2^depth` leaves with bandit feedback.
pub fn ucb_tree_run(stream: &[LossVector], depth: u32) -> Result<RegretLedger> {
    let mut tree = UcbTree::new(depth)?;
    let k = tree.leaf_count();
    if stream.is_empty() {
        return Err(Error::invalid("loss stream is empty"));
    }
    let mut ledger = RegretLedger::new(k, &[])?;
    for losses in stream {
        if losses.len() != k {
            return Err(Error::invalid(format!(
                "tree of depth {depth} has {k} leaves but the stream has {} actions",
                losses.len()
            )));
        }
        let route = ucb_tree_route(&mut tree, |leaf| losses.values()[leaf])?;
        ledger.record(route.leaf, losses.values(), None)?;
    }
    Ok(ledger)
}

/// Cost-aware cascade with bandit feedback. The ledger holds cost-plus-loss
/// values; with known `means` it also records each round's expected value.
pub fn cascade_run(stream: &[LossVector], costs: &[f64], means: Option<&[f64]>) -> Result<RegretLedger> {
    let k = costs.len();
    if stream.is_empty() {
        return Err(Error::invalid("loss stream is empty"));
    }
    if costs.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::invalid("costs must be finite and nonnegative"));
    }
    if means.is_some_and(|m| m.len() != k) {
        return Err(Error::invalid("one mean per arm is required"));
    }
    let mut arms: Vec<UcbArm> = costs.iter().map(|&c| UcbArm::new(c)).collect();
    let mut ledger = RegretLedger::new(k, &[])?;
    let horizon = stream.len() as u64;
    for (t, losses) in stream.iter().enumerate() {
        if losses.len() != k {
            return Err(Error::invalid("one cost per arm is required"));
        }
        let a = cascade_choose(&arms, t as u64 + 1, horizon)?;
        let totals: Vec<f64> = losses.values().iter().zip(costs).map(|(l, c)| l + c).collect();
        ledger.record(a, &totals, means.map(|m| m[a] + costs[a]))?;
        arms[a].record(losses.values()[a])?;
    }
    Ok(ledger)
}

struct Replication {
    seed: u64,
    regret: f64,
    expected_regret: Option<f64>,
    time_average_loss: f64,
    baseline_regret: Option<f64>,
    segments: usize,
    ledger: RegretLedger,
}

fn replicate(config: &SimulationConfig, env: &Environment, costs: &[f64], index: usize) -> Result<Replication> {
    let kind = config.simulation;
    let arms = env.arms(config.k);
    let means = env.means();
    let seed = derive_seed(config.seed, &["simulate", kind.name(), &index.to_string()]);
    let mut env_rng = seeded(derive_seed(seed, &["environment"]));
    let mut sel_rng = seeded(derive_seed(seed, &["selector"]));
    let stream = env.generate(config.horizon, config.k, &mut env_rng)?;
    let mut baseline_regret = None;
    let scale = config.scale.unwrap_or_else(|| tuned_scale(arms, config.horizon as u64));
    let ledger = match kind {
        SimulationKind::Fpl => fpl_run(&stream.losses, &stream.change_points, scale, &mut sel_rng)?,
        SimulationKind::AdaptiveWindow => {
            let mut base_rng = seeded(derive_seed(seed, &["baseline"]));
            let base = fpl_run(&stream.losses, &stream.change_points, scale, &mut base_rng)?;
            baseline_regret = Some(base.regret());
            adaptive_window_run(&stream.losses, &stream.change_points, &mut sel_rng)?
        }
        SimulationKind::UcbTree => ucb_tree_run(&stream.losses, config.depth)?,
        SimulationKind::Cascade => cascade_run(&stream.losses, costs, means.as_deref())?,
    };
    let expected_regret = match kind {
        SimulationKind::Fpl => Some(ledger.expected_regret()),
        SimulationKind::Cascade => means.as_ref().map(|m| {
            let best = m.iter().zip(costs).map(|(m, c)| m + c).fold(f64::INFINITY, f64::min);
            let expected: f64 = ledger.rows().iter().filter_map(|r| r.expected_loss).sum();
            expected - best * config.horizon as f64
        }),
        _ => None,
    };
    Ok(Replication {
        seed,
        regret: ledger.regret(),
        expected_regret,
        time_average_loss: ledger.incurred_total() / config.horizon as f64,
        baseline_regret,
        segments: stream.change_points.len() + 1,
        ledger,
    })
}

/// Runs `config.seeds` independent replications. Replication `i` derives its
/// environment and selector seeds from `config.seed` and `i`.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationOutput> {
    simulate_with_workers(config, 1)
}

/// [`simulate`] with replications spread over `workers` threads. Results do
/// not depend on the worker count.
pub fn simulate_with_workers(config: &SimulationConfig, workers: usize) -> Result<SimulationOutput> {
    if config.horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if config.seeds == 0 {
        return Err(Error::invalid("at least one seed is required"));
    }
    let kind = config.simulation;
    let env = config.resolved_environment();
    let arms = env.arms(config.k);
    let costs = config.resolved_costs(arms);
    if kind == SimulationKind::Cascade && costs.len() != arms {
        return Err(Error::invalid(format!("{} costs given for {arms} arms", costs.len())));
    }
    let cost_span = costs.iter().cloned().fold(0.0, f64::max);

    let workers = workers.clamp(1, config.seeds);
    let reps: Vec<Replication> = if workers == 1 {
        (0..config.seeds)
            .map(|i| replicate(config, &env, &costs, i))
            .collect::<Result<_>>()?
    } else {
        let mut slots: Vec<Option<Result<Replication>>> = (0..config.seeds).map(|_| None).collect();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let (env, costs) = (&env, &costs);
                    scope.spawn(move || {
                        (w..config.seeds)
                            .step_by(workers)
                            .map(|i| (i, replicate(config, env, costs, i)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("simulation worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
        slots.into_iter().flatten().collect::<Result<_>>()?
    };

    let segments = reps.last().map_or(1, |r| r.segments);
    let bound = kind.bound_constant() * bound_rate(kind, config.horizon, arms, segments, config.depth, cost_span);
    let mut runs = Vec::with_capacity(reps.len());
    let mut ledgers = Vec::with_capacity(reps.len());
    for r in reps {
        runs.push(SeedResult {
            seed: r.seed,
            regret: r.regret,
            expected_regret: r.expected_regret,
            time_average_loss: r.time_average_loss,
            baseline_regret: r.baseline_regret,
            ratio: r.expected_regret.unwrap_or(r.regret) / bound,
        });
        ledgers.push(r.ledger);
    }
    let n = runs.len() as f64;
    let summary = SimulationSummary {
        simulation: kind,
        horizon: config.horizon,
        arms,
        segments,
        bound_constant: kind.bound_constant(),
        bound,
        mean_regret: runs.iter().map(|r| r.regret).sum::<f64>() / n,
        mean_ratio: runs.iter().map(|r| r.ratio).sum::<f64>() / n,
        max_ratio: runs.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max),
        runs,
    };
    Ok(SimulationOutput { summary, ledgers })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(rows: &[[f64; 2]], t: usize) -> Vec<LossVector> {
        (0..t)
            .map(|i| LossVector::new(rows[i % rows.len()].to_vec()).unwrap())
            .collect()
    }

    #[test]
    fn ucb1_regret_grows_sublinearly() {
        let r1 = ucb1_run(&stream(&[[0.0, 1.0]], 2000)).unwrap().regret();
        let r2 = ucb1_run(&stream(&[[0.0, 1.0]], 4000)).unwrap().regret();
        assert!(r1 > 0.0);
        assert!(r2 / r1 < 2.0, "{r1} {r2}");
    }

    #[test]
    fn depth_one_tree_prefers_the_zero_leaf() {
        let ledger = ucb_tree_run(&stream(&[[0.0, 1.0]], 2000), 1).unwrap();
        let zeros = ledger.rows().iter().filter(|r| r.chosen == 0).count();
        assert!(zeros as f64 / 2000.0 > 0.95);
    }

    #[test]
    fn cascade_settles_on_the_cheap_arm_when_losses_tie() {
        let ledger = cascade_run(&stream(&[[0.0, 0.0]], 1000), &[0.0, 10.0], Some(&[0.0, 0.0])).unwrap();
        let late = &ledger.rows()[99..];
        let cheap = late.iter().filter(|r| r.chosen == 0).count();
        assert!(cheap as f64 / late.len() as f64 > 0.95);
    }

    #[test]
    fn cascade_rejects_unsorted_costs() {
        assert!(cascade_run(&stream(&[[0.0, 0.0]], 5), &[10.0, 0.0], None).is_err());
    }

    #[test]
    fn ucb_tree_rejects_mismatched_leaf_count() {
        assert!(ucb_tree_run(&stream(&[[0.0, 1.0]], 5), 2).is_err());
    }

    #[test]
    fn single_round_simulations_have_unit_bounded_regret() {
        for kind in [
            SimulationKind::Fpl,
            SimulationKind::AdaptiveWindow,
            SimulationKind::UcbTree,
        ] {
            let mut cfg = SimulationConfig::new(kind, 1);
            cfg.seeds = 5;
            let out = simulate(&cfg).unwrap();
            for r in &out.summary.runs {
                assert!((0.0..=1.0).contains(&r.regret), "{kind:?} {}", r.regret);
            }
        }
    }

    #[test]
    fn simulate_produces_one_ledger_per_seed_and_replays() {
        let mut cfg = SimulationConfig::new(SimulationKind::Fpl, 1000);
        cfg.seeds = 10;
        let a = simulate(&cfg).unwrap();
        assert_eq!(a.ledgers.len(), 10);
        assert!(a.summary.max_ratio.is_finite());
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.ledgers, b.ledgers);
        assert_eq!(a.summary, b.summary);
        let c = simulate_with_workers(&cfg, 4).unwrap();
        assert_eq!(a.ledgers, c.ledgers);
        assert_eq!(a.summary, c.summary);
    }

    #[test]
    fn config_json_round_trips_with_defaults() {
        let cfg: SimulationConfig = serde_json::from_str(
            r#"{"simulation":"ucb-tree","horizon":100,"K":4,"seed":3,
                "environment":{"name":"constant","params":{"losses":[0,1,1,1]}}}"#,
        )
        .unwrap();
        assert_eq!(cfg.k, 4);
        assert_eq!(cfg.seeds, 1);
        let back: SimulationConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<SimulationConfig>(r#"{"simulation":"nope","horizon":1}"#).is_err());
    }

    #[test]
    fn ucb_tree_default_stays_within_bound() {
        let mut cfg = SimulationConfig::new(SimulationKind::UcbTree, 10_000);
        cfg.seeds = 3;
        let out = simulate(&cfg).unwrap();
        assert!(out.summary.within_bound(), "{:?}", out.summary.max_ratio);
    }
}
