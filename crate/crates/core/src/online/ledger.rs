use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    /// 1-based round number.
    pub round: usize,
    pub chosen: usize,
    pub incurred_loss: f64,
    /// Loss expected under the selector's choice distribution, when known.
    pub expected_loss: Option<f64>,
    /// Sum over stationary segments so far of the best fixed action's
    /// cumulative loss within that segment.
    pub best_fixed_cumloss: f64,
    pub regret: f64,
}

/// Per-round record of an online run against a piecewise-stationary
/// comparator: within every segment the comparator is the best fixed action
/// in hindsight for that segment. With one segment this is ordinary regret.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretLedger {
    k: usize,
    rows: Vec<LedgerRow>,
    losses: Vec<Vec<f64>>,
    segment_starts: Vec<usize>,
    #[serde(skip)]
    closed_best: f64,
    #[serde(skip)]
    segment_cum: Vec<f64>,
    #[serde(skip)]
    incurred_total: f64,
}

impl RegretLedger {
    /// `segment_starts` lists the 0-based rounds at which a new stationary
    /// segment begins; round 0 always starts one.
    pub fn new(k: usize, segment_starts: &[usize]) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("ledger needs at least one action"));
        }
        let mut starts: Vec<usize> = segment_starts.iter().copied().filter(|&s| s > 0).collect();
        starts.sort_unstable();
        starts.dedup();
        starts.insert(0, 0);
        Ok(RegretLedger {
            k,
            rows: Vec::new(),
            losses: Vec::new(),
            segment_starts: starts,
            closed_best: 0.0,
            segment_cum: vec![0.0; k],
            incurred_total: 0.0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn loss_history(&self) -> &[Vec<f64>] {
        &self.losses
    }

    pub fn segment_starts(&self) -> &[usize] {
        &self.segment_starts
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends one round. `losses` holds every action's loss this round.
    pub fn record(&mut self, chosen: usize, losses: &[f64], expected_loss: Option<f64>) -> Result<()> {
        if losses.len() != self.k {
            return Err(Error::invalid(format!(
                "ledger expects {} losses, got {}",
                self.k,
                losses.len()
            )));
        }
        if chosen >= self.k {
            return Err(Error::invalid(format!("action {chosen} out of range")));
        }
        if losses.iter().any(|l| !l.is_finite()) {
            return Err(Error::invalid("ledger losses must be finite"));
        }
        let t = self.rows.len();
        if t > 0 && self.segment_starts.binary_search(&t).is_ok() {
            self.closed_best += min(&self.segment_cum);
            self.segment_cum.iter_mut().for_each(|c| *c = 0.0);
        }
        for (c, l) in self.segment_cum.iter_mut().zip(losses) {
            *c += l;
        }
        self.incurred_total += losses[chosen];
        let best = self.closed_best + min(&self.segment_cum);
        self.rows.push(LedgerRow {
            round: t + 1,
            chosen,
            incurred_loss: losses[chosen],
            expected_loss,
            best_fixed_cumloss: best,
            regret: self.incurred_total - best,
        });
        self.losses.push(losses.to_vec());
        Ok(())
    }

    pub fn incurred_total(&self) -> f64 {
        self.incurred_total
    }

    pub fn best_fixed_total(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.best_fixed_cumloss)
    }

    pub fn regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.regret)
    }

    /// Regret measured with expected instead of realized per-round losses.
    /// Rounds without an expected loss contribute their realized loss.
    pub fn expected_regret(&self) -> f64 {
        let expected: f64 = self
            .rows
            .iter()
            .map(|r| r.expected_loss.unwrap_or(r.incurred_loss))
            .sum();
        expected - self.best_fixed_total()
    }

    /// Regret recomputed from the stored loss history alone.
    pub fn recompute_regret(&self) -> f64 {
        let mut bounds = self.segment_starts.clone();
        bounds.push(self.losses.len());
        let mut best = 0.0;
        for w in bounds.windows(2) {
            let (lo, hi) = (w[0].min(self.losses.len()), w[1].min(self.losses.len()));
            if lo >= hi {
                continue;
            }
            let per_action = (0..self.k).map(|a| self.losses[lo..hi].iter().map(|row| row[a]).sum::<f64>());
            best += per_action.fold(f64::INFINITY, f64::min);
        }
        let incurred: f64 = self.rows.iter().zip(&self.losses).map(|(r, l)| l[r.chosen]).sum();
        incurred - best
    }

    /// Per-round CSV: `round,chosen,incurred_loss,best_fixed_cumloss,regret`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "round,chosen,incurred_loss,best_fixed_cumloss,regret")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.round, r.chosen, r.incurred_loss, r.best_fixed_cumloss, r.regret
            )?;
        }
        Ok(())
    }
}

fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}
