use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comb::softmax;
use crate::error::{Error, Result};
use crate::rng;

/// One round of losses, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(losses: Vec<f64>) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::invalid("loss vector must have at least one entry"));
        }
        if let Some(l) = losses.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::invalid(format!("loss {l} outside [0, 1]")));
        }
        Ok(LossVector(losses))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for LossVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        LossVector::new(v)
    }
}

impl From<LossVector> for Vec<f64> {
    fn from(v: LossVector) -> Self {
        v.0
    }
}

/// Follow-the-perturbed-leader over K actions with full-information
/// feedback.
///
/// Each round draws fresh Gumbel(0, 1) noise per action and plays
/// `argmin_a (L_a - scale * G_a)`. Because the Gumbel-max trick makes this
/// choice softmax-distributed, `scale` plays the role of an inverse learning
/// rate: `scale = 1` leaves the leader almost unperturbed once cumulative
/// losses differ by a few units, while [`FplState::tuned`] picks the
/// horizon-dependent scale that yields `O(sqrt(T ln K))` regret.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FplState {
    pub cumulative_losses: Vec<f64>,
    pub round: u64,
    pub scale: f64,
}

impl FplState {
    /// Unit-scale perturbations.
    pub fn new(k: usize) -> Result<Self> {
        Self::with_scale(k, 1.0)
    }

    pub fn with_scale(k: usize, scale: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("FPL needs at least one action"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("perturbation scale {scale} must be positive")));
        }
        Ok(FplState {
            cumulative_losses: vec![0.0; k],
            round: 0,
            scale,
        })
    }

    /// Perturbation scale `sqrt(T / (8 ln K))` for a known horizon `T`.
    pub fn tuned(k: usize, horizon: u64) -> Result<Self> {
        Self::with_scale(k, tuned_scale(k, horizon))
    }

    pub fn k(&self) -> usize {
        self.cumulative_losses.len()
    }

    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        super::argmin(self.cumulative_losses.iter().map(|l| l - self.scale * rng::gumbel(rng)))
    }

    /// Exact choice distribution of [`choose`](Self::choose):
    /// `softmax(-L / scale)`.
    pub fn choice_probabilities(&self) -> Vec<f64> {
        let scores: Vec<f64> = self.cumulative_losses.iter().map(|l| -l / self.scale).collect();
        softmax(&scores)
    }

    pub fn update(&mut self, losses: &LossVector) -> Result<()> {
        if losses.len() != self.k() {
            return Err(Error::invalid(format!(
                "loss vector has {} entries, expected {}",
                losses.len(),
                self.k()
            )));
        }
        for (c, l) in self.cumulative_losses.iter_mut().zip(losses.values()) {
            *c += l;
        }
        self.round += 1;
        Ok(())
    }

    /// Forget all history; the scale is kept.
    pub fn reset(&mut self) {
        self.cumulative_losses.iter_mut().for_each(|c| *c = 0.0);
        self.round = 0;
    }
}

pub(crate) fn tuned_scale(k: usize, horizon: u64) -> f64 {
    if k < 2 {
        return 1.0;
    }
    (horizon.max(1) as f64 / (8.0 * (k as f64).ln())).sqrt()
}

pub fn fpl_choose<R: Rng + ?Sized>(state: &FplState, rng: &mut R) -> usize {
    state.choose(rng)
}

pub fn fpl_update(state: &FplState, losses: &LossVector) -> Result<FplState> {
    let mut next = state.clone();
    next.update(losses)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn lv(v: &[f64]) -> LossVector {
        LossVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_action_is_always_chosen() {
        let s = FplState::new(1).unwrap();
        let mut rng = seeded(1);
        assert!((0..1000).all(|_| s.choose(&mut rng) == 0));
    }

    #[test]
    fn huge_lead_is_almost_never_overturned() {
        let mut s = FplState::new(2).unwrap();
        s.cumulative_losses = vec![0.0, 1e6];
        let mut rng = seeded(2);
        let n = 10_000;
        let zeros = (0..n).filter(|_| s.choose(&mut rng) == 0).count();
        assert!(zeros as f64 / n as f64 > 0.999);
    }

    #[test]
    fn ties_are_broken_uniformly() {
        let s = FplState::new(4).unwrap();
        let mut rng = seeded(3);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[s.choose(&mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn empirical_choice_matches_gumbel_max_distribution() {
        let mut s = FplState::with_scale(3, 2.0).unwrap();
        s.cumulative_losses = vec![0.0, 1.0, 3.0];
        let p = s.choice_probabilities();
        let mut rng = seeded(4);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[s.choose(&mut rng)] += 1;
        }
        for (c, pi) in counts.iter().zip(&p) {
            let sd = (pi * (1.0 - pi) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - pi).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn update_examples() {
        let s = FplState::new(2).unwrap();
        let z = fpl_update(&s, &lv(&[0.0, 0.0])).unwrap();
        assert_eq!(z.cumulative_losses, s.cumulative_losses);
        assert_eq!(z.round, 1);

        let once = fpl_update(&s, &lv(&[1.0, 0.0])).unwrap();
        let twice = fpl_update(&once, &lv(&[1.0, 0.0])).unwrap();
        assert_eq!(twice.cumulative_losses, vec![2.0, 0.0]);

        assert!(fpl_update(&s, &lv(&[0.5])).is_err());
    }

    #[test]
    fn cumulative_losses_equal_column_sums() {
        let mut rng = seeded(5);
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let mut s = FplState::new(3).unwrap();
        for r in &rows {
            s.update(&lv(r)).unwrap();
        }
        for a in 0..3 {
            let mut col = 0.0;
            for r in &rows {
                col += r[a];
            }
            assert!((s.cumulative_losses[a] - col).abs() < 1e-12);
        }
        assert_eq!(s.round, 100);
    }

    #[test]
    fn choice_is_invariant_to_common_shift() {
        let mut a = FplState::new(5).unwrap();
        a.cumulative_losses = vec![3.0, 1.0, 4.0, 1.5, 2.0];
        let mut b = a.clone();
        b.cumulative_losses.iter_mut().for_each(|c| *c += 17.0);
        let mut ra = seeded(6);
        let mut rb = seeded(6);
        for _ in 0..10_000 {
            assert_eq!(a.choose(&mut ra), b.choose(&mut rb));
        }
    }

    #[test]
    fn loss_vector_validation() {
        assert!(LossVector::new(vec![]).is_err());
        assert!(LossVector::new(vec![1.5]).is_err());
        assert!(LossVector::new(vec![f64::NAN]).is_err());
        assert!(FplState::new(0).is_err());
        assert!(FplState::with_scale(2, 0.0).is_err());
    }

    #[test]
    fn tuned_scale_grows_with_horizon() {
        assert_eq!(tuned_scale(1, 1000), 1.0);
        let s = tuned_scale(2, 10_000);
        assert!((s - (10_000.0 / (8.0 * 2f64.ln())).sqrt()).abs() < 1e-12);
        assert!(tuned_scale(2, 100) < s);
    }
}
