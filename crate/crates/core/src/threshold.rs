//! Learning the selection threshold from observed runtimes.
//!
//! Runtimes are summarized by the log-ratio `R = ln T_sys - ln T_ran`
//! (negative when the systematic algorithm is faster). The threshold is the
//! empirical median of `R`, banded by the DKW inequality. A median-of-means
//! ERM over a finite hypothesis class handles corrupted training data.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::comb::SeedingFunction;
use crate::error::{Error, Result};
use crate::stats;

/// Default floor applied to zero or sub-resolution timings, in seconds.
pub const DEFAULT_RUNTIME_FLOOR: f64 = 1e-7;

/// Default confidence level used when a report needs a concrete DKW band.
pub const DEFAULT_BAND_DELTA: f64 = 0.05;

pub fn clamp_runtime(seconds: f64, floor: f64) -> f64 {
    if seconds.is_nan() {
        floor
    } else {
        seconds.max(floor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRatioSample {
    pub instance: String,
    pub r: f64,
}

impl LogRatioSample {
    pub fn new(instance: impl Into<String>, t_sys: f64, t_ran: f64) -> Result<Self> {
        Ok(LogRatioSample {
            instance: instance.into(),
            r: log_ratio(t_sys, t_ran)?,
        })
    }
}

/// `ln(t_sys) - ln(t_ran)`; both runtimes must be positive and finite.
pub fn log_ratio(t_sys: f64, t_ran: f64) -> Result<f64> {
    for (name, t) in [("systematic", t_sys), ("random", t_ran)] {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid(format!(
                "{name} runtime {t} must be positive and finite; clamp zero timings first"
            )));
        }
    }
    Ok(t_sys.ln() - t_ran.ln())
}

/// DKW tail: `P(sup |F_k - F| > eps) <= 2 exp(-2 k eps^2)`.
pub fn dkw_tail_bound(k: usize, eps: f64) -> f64 {
    (2.0 * (-2.0 * k as f64 * eps * eps).exp()).min(1.0)
}

/// Half-width `eps` at which the DKW tail equals `delta`.
pub fn dkw_half_width(k: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * k as f64)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub theta_k: f64,
    pub k: usize,
    /// Confidence parameter used for the serialized `epsilon_band`.
    pub delta: f64,
    /// DKW half-width at `delta`, on the CDF scale.
    pub epsilon_band: f64,
    pub sample_min: f64,
    pub sample_max: f64,
}

impl ThresholdEstimate {
    pub fn epsilon_band_at(&self, delta: f64) -> f64 {
        dkw_half_width(self.k, delta)
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self.epsilon_band = dkw_half_width(self.k, delta);
        self
    }
}

pub fn empirical_median(samples: &[LogRatioSample]) -> Result<ThresholdEstimate> {
    let values: Vec<f64> = samples.iter().map(|s| s.r).collect();
    median_estimate(&values)
}

/// [`empirical_median`] over raw values.
pub fn median_estimate(values: &[f64]) -> Result<ThresholdEstimate> {
    if values.is_empty() {
        return Err(Error::invalid("median of an empty sample"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("log-ratio samples must be finite"));
    }
    let k = values.len();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    Ok(ThresholdEstimate {
        theta_k: stats::median(values),
        k,
        delta: DEFAULT_BAND_DELTA,
        epsilon_band: dkw_half_width(k, DEFAULT_BAND_DELTA),
        sample_min: lo,
        sample_max: hi,
    })
}

/// Seeding function whose comb parameter crosses 0.5 exactly where the
/// predicted log-ratio at `ratio_feature_index` equals the learned threshold.
pub fn threshold_to_seeding(
    theta: &ThresholdEstimate,
    dim: usize,
    ratio_feature_index: usize,
    slope: f64,
) -> Result<SeedingFunction> {
    if !(slope > 0.0 && slope.is_finite()) {
        return Err(Error::invalid(format!("slope {slope} must be positive")));
    }
    if ratio_feature_index >= dim {
        return Err(Error::invalid(format!(
            "ratio feature index {ratio_feature_index} out of range for dimension {dim}"
        )));
    }
    let mut weights = vec![0.0; dim];
    weights[ratio_feature_index] = slope;
    SeedingFunction::new(weights, -slope * theta.theta_k)
}

/// A finite set of hypotheses with losses in `[0, 1]`.
pub trait HypothesisClass<Z> {
    fn len(&self) -> usize;

    fn loss(&self, hypothesis: usize, datum: &Z) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<Z, F: Fn(&Z) -> f64> HypothesisClass<Z> for [F] {
    fn len(&self) -> usize {
        <[F]>::len(self)
    }

    fn loss(&self, hypothesis: usize, datum: &Z) -> f64 {
        self[hypothesis](datum)
    }
}

impl<Z, F: Fn(&Z) -> f64> HypothesisClass<Z> for Vec<F> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn loss(&self, hypothesis: usize, datum: &Z) -> f64 {
        self[hypothesis](datum)
    }
}

/// How data points are assigned to blocks before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockAssignment {
    /// Uniformly permute the data, then cut consecutive blocks.
    #[default]
    Shuffled,
    /// Cut consecutive blocks in the order the data arrived.
    Contiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomEstimate {
    pub chosen: usize,
    pub mom_risk: Vec<f64>,
    pub k_blocks: usize,
    pub block_size: usize,
}

/// `min(ceil(8 ln(2|H| / delta)), floor(n / 2))`, at least one.
pub fn mom_block_count(n: usize, class_size: usize, delta: f64) -> usize {
    let wanted = (8.0 * (2.0 * class_size as f64 / delta).ln()).ceil().max(1.0) as usize;
    wanted.min(n / 2).max(1)
}

/// Median-of-means ERM with shuffled blocks.
pub fn mom_erm<Z, H, R>(data: &[Z], class: &H, delta: f64, rng: &mut R) -> Result<MomEstimate>
where
    H: HypothesisClass<Z> + ?Sized,
    R: Rng + ?Sized,
{
    mom_erm_with(data, class, delta, BlockAssignment::Shuffled, rng)
}

pub fn mom_erm_with<Z, H, R>(
    data: &[Z],
    class: &H,
    delta: f64,
    assignment: BlockAssignment,
    rng: &mut R,
) -> Result<MomEstimate>
where
    H: HypothesisClass<Z> + ?Sized,
    R: Rng + ?Sized,
{
    let n = data.len();
    if n < 2 {
        return Err(Error::invalid(format!("median-of-means needs n >= 2, got {n}")));
    }
    if class.is_empty() {
        return Err(Error::invalid("hypothesis class is empty"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta {delta} must lie in (0, 1)")));
    }
    let k = mom_block_count(n, class.len(), delta);
    let m = n / k;

    let mut order: Vec<usize> = (0..n).collect();
    if assignment == BlockAssignment::Shuffled {
        order.shuffle(rng);
    }
    let order = &order[..k * m];

    let mut mom_risk = Vec::with_capacity(class.len());
    for h in 0..class.len() {
        let mut block_means = Vec::with_capacity(k);
        for block in order.chunks(m) {
            let mut total = 0.0;
            for &i in block {
                total += checked_loss(class, h, &data[i])?;
            }
            block_means.push(total / m as f64);
        }
        mom_risk.push(stats::median(&block_means));
    }
    Ok(MomEstimate {
        chosen: argmin(&mom_risk),
        mom_risk,
        k_blocks: k,
        block_size: m,
    })
}

/// Plain empirical-risk minimizer over all data; returns the chosen index and
/// per-hypothesis mean losses.
pub fn mean_erm<Z, H>(data: &[Z], class: &H) -> Result<(usize, Vec<f64>)>
where
    H: HypothesisClass<Z> + ?Sized,
{
    if data.is_empty() || class.is_empty() {
        return Err(Error::invalid("mean ERM needs data and hypotheses"));
    }
    let mut risks = Vec::with_capacity(class.len());
    for h in 0..class.len() {
        let mut total = 0.0;
        for z in data {
            total += checked_loss(class, h, z)?;
        }
        risks.push(total / data.len() as f64);
    }
    Ok((argmin(&risks), risks))
}

fn checked_loss<Z, H: HypothesisClass<Z> + ?Sized>(class: &H, h: usize, z: &Z) -> Result<f64> {
    let l = class.loss(h, z);
    if !(0.0..=1.0).contains(&l) {
        return Err(Error::invalid(format!("loss {l} of hypothesis {h} outside [0, 1]")));
    }
    Ok(l)
}

/// Index of the smallest value; ties go to the lowest index.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Two-hypothesis corruption experiment.
///
/// Each clean datum carries independent Bernoulli losses for a good
/// hypothesis (risk `risks.0`) and a worse one (`risks.1`). A contiguous
/// batch covering `fraction` of the data, at an oblivious random offset, is
/// replaced by points on which the good hypothesis loses and the worse one
/// does not.
pub mod corruption {
    use super::*;

    #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
    pub struct CorruptionSetup {
        pub n: usize,
        pub risks: (f64, f64),
        pub fraction: f64,
        pub delta: f64,
    }

    impl Default for CorruptionSetup {
        fn default() -> Self {
            CorruptionSetup {
                n: 400,
                risks: (0.2, 0.4),
                fraction: 0.25,
                delta: 0.05,
            }
        }
    }

    #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
    pub struct TrialOutcome {
        pub mom_correct: bool,
        pub mean_correct: bool,
    }

    /// Loss pairs `[good, worse]` for one seeded trial.
    pub fn generate<R: Rng + ?Sized>(setup: &CorruptionSetup, rng: &mut R) -> Vec<[f64; 2]> {
        let mut data: Vec<[f64; 2]> = (0..setup.n)
            .map(|_| {
                let a = if rng.random::<f64>() < setup.risks.0 { 1.0 } else { 0.0 };
                let b = if rng.random::<f64>() < setup.risks.1 { 1.0 } else { 0.0 };
                [a, b]
            })
            .collect();
        let bad = (setup.fraction * setup.n as f64).round() as usize;
        if bad > 0 {
            let start = rng.random_range(0..=setup.n - bad);
            for z in &mut data[start..start + bad] {
                *z = [1.0, 0.0];
            }
        }
        data
    }

    pub fn class() -> Vec<fn(&[f64; 2]) -> f64> {
        vec![|z| z[0], |z| z[1]]
    }

    pub fn run_trial<R: Rng + ?Sized>(
        setup: &CorruptionSetup,
        assignment: BlockAssignment,
        rng: &mut R,
    ) -> Result<TrialOutcome> {
        let data = generate(setup, rng);
        let class = class();
        let mom = mom_erm_with(&data, &class, setup.delta, assignment, rng)?;
        let (mean_choice, _) = mean_erm(&data, &class)?;
        Ok(TrialOutcome {
            mom_correct: mom.chosen == 0,
            mean_correct: mean_choice == 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::corruption::*;
    use super::*;
    use crate::comb::FeatureVector;
    use crate::rng::seeded;
    use gaussian::standard_normal;
    use proptest::prelude::*;

    /// Box-Muller, kept local so the test oracle shares no code with the
    /// library.
    mod gaussian {
        use rand::Rng;

        pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random::<f64>();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }

    #[test]
    fn log_ratio_examples() {
        assert_eq!(log_ratio(1.0, 1.0).unwrap(), 0.0);
        assert!((log_ratio(std::f64::consts::E, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let r = log_ratio(0.002, 0.008).unwrap();
        assert!((r - 0.25f64.ln()).abs() < 1e-12);
        assert!((r + 1.3863).abs() < 1e-4);
    }

    #[test]
    fn log_ratio_rejects_nonpositive_and_nonfinite() {
        for (a, b) in [(0.0, 1.0), (1.0, -2.0), (f64::NAN, 1.0), (1.0, f64::INFINITY)] {
            assert!(matches!(log_ratio(a, b), Err(Error::InvalidArgument(_))));
        }
        assert!(log_ratio(clamp_runtime(0.0, DEFAULT_RUNTIME_FLOOR), 1.0).is_ok());
    }

    #[test]
    fn median_examples() {
        let samples = |v: &[f64]| -> Vec<LogRatioSample> {
            v.iter()
                .enumerate()
                .map(|(i, &r)| LogRatioSample {
                    instance: i.to_string(),
                    r,
                })
                .collect()
        };
        assert_eq!(empirical_median(&samples(&[1.0, 2.0, 3.0])).unwrap().theta_k, 2.0);
        assert_eq!(empirical_median(&samples(&[1.0, 2.0, 3.0, 4.0])).unwrap().theta_k, 2.5);
        assert!(empirical_median(&[]).is_err());

        let est = median_estimate(&vec![0.0; 100]).unwrap();
        let band = est.epsilon_band_at(0.05);
        assert!((band - (40f64.ln() / 200.0).sqrt()).abs() < 1e-12);
        assert!((band - 0.1358).abs() < 1e-4);
    }

    #[test]
    fn band_shrinks_with_k() {
        let mut prev = f64::INFINITY;
        for k in [1, 2, 5, 10, 100, 1000] {
            let b = dkw_half_width(k, 0.05);
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn estimate_serializes_with_named_fields() {
        let est = median_estimate(&[1.0, 3.0]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&est).unwrap();
        for key in ["theta_k", "k", "epsilon_band", "delta"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let mom = MomEstimate {
            chosen: 0,
            mom_risk: vec![0.1, 0.2],
            k_blocks: 3,
            block_size: 4,
        };
        let v: serde_json::Value = serde_json::to_value(&mom).unwrap();
        for key in ["chosen", "mom_risk", "k_blocks", "block_size"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn threshold_to_seeding_examples() {
        let est = |theta: f64| ThresholdEstimate {
            theta_k: theta,
            ..median_estimate(&[theta]).unwrap()
        };
        let at = |s: &SeedingFunction, r: f64| s.seed(&FeatureVector::new(vec![7.0, r]).unwrap()).unwrap().value();
        let s = threshold_to_seeding(&est(0.0), 2, 1, 1.0).unwrap();
        assert_eq!(at(&s, 0.0), 0.5);
        let s = threshold_to_seeding(&est(1.0), 2, 1, 4.0).unwrap();
        assert_eq!(at(&s, 1.0), 0.5);
        let s = threshold_to_seeding(&est(0.0), 2, 1, 2.0).unwrap();
        assert!((at(&s, 3f64.ln() / 2.0) - 0.75).abs() < 1e-12);

        assert!(threshold_to_seeding(&est(0.0), 2, 1, 0.0).is_err());
        assert!(threshold_to_seeding(&est(0.0), 2, 1, -1.0).is_err());
        assert!(threshold_to_seeding(&est(0.0), 2, 2, 1.0).is_err());
    }

    /// Standard normal CDF by Simpson integration of the density.
    fn normal_cdf(x: f64) -> f64 {
        let n = 2000;
        let h = x / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = pdf(0.0) + pdf(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf(i as f64 * h);
        }
        0.5 + s * h / 3.0
    }

    #[test]
    fn dkw_bands_the_median_on_the_cdf_scale() {
        // F(theta_k) must stay within eps of F(theta*) = 1/2 no more often
        // than the DKW tail allows.
        for (k, eps) in [(50usize, 0.2), (200, 0.1), (1000, 0.05)] {
            let mut rng = seeded(k as u64);
            let trials = 1000;
            let violations = (0..trials)
                .filter(|_| {
                    let xs: Vec<f64> = (0..k).map(|_| standard_normal(&mut rng)).collect();
                    let theta = median_estimate(&xs).unwrap().theta_k;
                    (normal_cdf(theta) - 0.5).abs() > eps
                })
                .count();
            let rate = violations as f64 / trials as f64;
            assert!(rate < dkw_tail_bound(k, eps), "k={k}: {rate}");
        }
    }

    #[test]
    fn median_error_decreases_with_k() {
        let mut prev = f64::INFINITY;
        for k in [10usize, 100, 1000] {
            let mut rng = seeded(100 + k as u64);
            let errs: Vec<f64> = (0..200)
                .map(|_| {
                    let xs: Vec<f64> = (0..k).map(|_| standard_normal(&mut rng)).collect();
                    median_estimate(&xs).unwrap().theta_k.abs()
                })
                .collect();
            let m = stats::median(&errs);
            assert!(m < prev, "k={k}: {m} !< {prev}");
            prev = m;
        }
    }

    #[test]
    fn mom_constant_losses() {
        let data: Vec<u8> = (0..50).collect();
        let class: Vec<fn(&u8) -> f64> = vec![|_| 0.0, |_| 1.0];
        let est = mom_erm(&data, &class, 0.05, &mut seeded(1)).unwrap();
        assert_eq!(est.chosen, 0);
        assert_eq!(est.mom_risk, vec![0.0, 1.0]);
        assert!(est.k_blocks >= 1 && est.k_blocks * est.block_size <= data.len());
    }

    #[test]
    fn mom_single_block_is_mean_erm() {
        // n = 3 caps the block count at floor(3/2) = 1
        let data = vec![0.9, 0.1, 0.5];
        let class: Vec<fn(&f64) -> f64> = vec![|z| *z, |z| 1.0 - z, |z| (z - 0.5).abs()];
        let est = mom_erm(&data, &class, 0.1, &mut seeded(5)).unwrap();
        assert_eq!(est.k_blocks, 1);
        let (mean_choice, risks) = mean_erm(&data, &class).unwrap();
        assert_eq!(est.chosen, mean_choice);
        for (a, b) in est.mom_risk.iter().zip(&risks) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mom_errors() {
        let class: Vec<fn(&f64) -> f64> = vec![|z| *z];
        let empty: Vec<fn(&f64) -> f64> = vec![];
        let mut rng = seeded(0);
        assert!(mom_erm(&[0.5], &class, 0.1, &mut rng).is_err());
        assert!(mom_erm(&[0.5, 0.5], &empty, 0.1, &mut rng).is_err());
        assert!(mom_erm(&[0.5, 0.5], &class, 0.0, &mut rng).is_err());
        assert!(mom_erm(&[0.5, 0.5], &class, 1.0, &mut rng).is_err());
        assert!(mom_erm(&[0.5, 2.0], &class, 0.1, &mut rng).is_err());
    }

    #[test]
    fn block_count_formula_and_cap() {
        // ceil(8 ln 80) = 36
        assert_eq!(mom_block_count(400, 2, 0.05), 36);
        assert_eq!(mom_block_count(20, 2, 0.05), 10);
        assert_eq!(mom_block_count(2, 2, 0.05), 1);
    }

    #[test]
    fn mom_is_replay_deterministic() {
        let setup = CorruptionSetup::default();
        let data = generate(&setup, &mut seeded(3));
        let a = mom_erm(&data, &class(), 0.05, &mut seeded(8)).unwrap();
        let b = mom_erm(&data, &class(), 0.05, &mut seeded(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mom_choice_is_stable_across_permutations_on_clean_data() {
        // gap 0.2 exceeds 4 sqrt(ln(2|H|/delta) k / (2n)) = 0.167 at n = 10^4, delta = 0.5
        let setup = CorruptionSetup {
            n: 10_000,
            risks: (0.2, 0.4),
            fraction: 0.0,
            delta: 0.5,
        };
        let k = mom_block_count(setup.n, 2, setup.delta) as f64;
        let gap_needed = 4.0 * ((4.0f64 / setup.delta).ln() * k / (2.0 * setup.n as f64)).sqrt();
        assert!(0.2 > gap_needed, "{gap_needed}");
        let data = generate(&setup, &mut seeded(42));
        for s in 0..50 {
            let est = mom_erm(&data, &class(), setup.delta, &mut seeded(s)).unwrap();
            assert_eq!(est.chosen, 0);
        }
    }

    #[test]
    fn corruption_experiment_mom_resists_batch_corruption() {
        let setup = CorruptionSetup::default();
        let mut mom_wins = 0;
        let mut mean_wins = 0;
        for s in 0..100 {
            let out = run_trial(&setup, BlockAssignment::Contiguous, &mut seeded(s)).unwrap();
            mom_wins += out.mom_correct as usize;
            mean_wins += out.mean_correct as usize;
        }
        assert!(mom_wins >= 90, "{mom_wins}");
        // the corrupted mean ranks the worse hypothesis first (0.4 vs 0.3)
        assert!(mean_wins < 10, "{mean_wins}");
    }

    proptest! {
        #[test]
        fn adding_a_sample_above_the_median_never_lowers_it(
            xs in prop::collection::vec(-100.0f64..100.0, 1..40),
            bump in 0.0f64..50.0,
        ) {
            let before = median_estimate(&xs).unwrap();
            let mut more = xs.clone();
            more.push(before.theta_k + bump);
            let after = median_estimate(&more).unwrap();
            prop_assert!(after.theta_k >= before.theta_k);
            prop_assert!(before.theta_k >= before.sample_min && before.theta_k <= before.sample_max);
        }
    }
}
