use rand::Rng;

use super::fpl::{tuned_scale, FplState, LossVector};
use super::ledger::RegretLedger;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct WindowLearner {
    length: u64,
    learner: FplState,
}

/// Doubling-trick ensemble for piecewise-stationary streams.
///
/// One FPL learner runs per window length `1, 2, 4, …` (up to the first
/// length covering the horizon), each tuned to its window and restarted
/// whenever its window elapses. A top-level FPL over the learners'
/// recommendations decides which one to follow each round; it is charged the
/// loss each recommendation would have incurred.
#[derive(Debug, Clone)]
pub struct AdaptiveWindow {
    k: usize,
    windows: Vec<WindowLearner>,
    meta: FplState,
    round: u64,
}

impl AdaptiveWindow {
    pub fn new(k: usize, horizon: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("adaptive window needs at least one action"));
        }
        let horizon = horizon.max(1);
        let mut windows = Vec::new();
        let mut length = 1u64;
        loop {
            windows.push(WindowLearner {
                length,
                learner: FplState::with_scale(k, tuned_scale(k, length))?,
            });
            if length >= horizon {
                break;
            }
            length *= 2;
        }
        let meta = FplState::with_scale(windows.len(), tuned_scale(windows.len(), horizon))?;
        Ok(AdaptiveWindow {
            k,
            windows,
            meta,
            round: 0,
        })
    }

    pub fn window_lengths(&self) -> Vec<u64> {
        self.windows.iter().map(|w| w.length).collect()
    }

    /// The window learners' current recommendations and the index of the one
    /// the meta-learner follows.
    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<usize>, usize) {
        let recommendations: Vec<usize> = self.windows.iter().map(|w| w.learner.choose(rng)).collect();
        let followed = self.meta.choose(rng);
        (recommendations, followed)
    }

    pub fn observe(&mut self, recommendations: &[usize], losses: &LossVector) -> Result<()> {
        if losses.len() != self.k {
            return Err(Error::invalid(format!(
                "loss vector has {} entries, expected {}",
                losses.len(),
                self.k
            )));
        }
        let expert_losses: Vec<f64> = recommendations.iter().map(|&a| losses.values()[a]).collect();
        self.meta.update(&LossVector::new(expert_losses)?)?;
        self.round += 1;
        for w in &mut self.windows {
            w.learner.update(losses)?;
            if self.round.is_multiple_of(w.length) {
                w.learner.reset();
            }
        }
        Ok(())
    }
}

fn check_stream(stream: &[LossVector]) -> Result<usize> {
    let first = stream.first().ok_or_else(|| Error::invalid("loss stream is empty"))?;
    let k = first.len();
    if stream.iter().any(|l| l.len() != k) {
        return Err(Error::invalid("every round must have the same number of actions"));
    }
    Ok(k)
}

/// Runs [`AdaptiveWindow`] over a finite stream. `segments` lists the rounds
/// at which stationary segments begin and defines the ledger's comparator.
pub fn adaptive_window_run<R: Rng + ?Sized>(
    stream: &[LossVector],
    segments: &[usize],
    rng: &mut R,
) -> Result<RegretLedger> {
    let k = check_stream(stream)?;
    let mut selector = AdaptiveWindow::new(k, stream.len() as u64)?;
    let mut ledger = RegretLedger::new(k, segments)?;
    for losses in stream {
        let (recs, followed) = selector.propose(rng);
        ledger.record(recs[followed], losses.values(), None)?;
        selector.observe(&recs, losses)?;
    }
    Ok(ledger)
}

/// A single FPL learner over the whole stream, never restarted. The ledger
/// records the expected loss under its exact choice distribution alongside
/// the realized one.
pub fn fpl_run<R: Rng + ?Sized>(
    stream: &[LossVector],
    segments: &[usize],
    scale: f64,
    rng: &mut R,
) -> Result<RegretLedger> {
    let k = check_stream(stream)?;
    let mut state = FplState::with_scale(k, scale)?;
    let mut ledger = RegretLedger::new(k, segments)?;
    for losses in stream {
        let expected: f64 = state
            .choice_probabilities()
            .iter()
            .zip(losses.values())
            .map(|(p, l)| p * l)
            .sum();
        let chosen = state.choose(rng);
        ledger.record(chosen, losses.values(), Some(expected))?;
        state.update(losses)?;
    }
    Ok(ledger)
}
