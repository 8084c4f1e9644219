//! Synthetic experiment harness.
//!
//! Builds a forward-chained ground-truth model (states dwell, then advance,
//! last state absorbing), samples labeled training and test sequences from
//! it, and compares three predictors on the test split: argmax over
//! smoothed scores, online HMM decoding, and offline Viterbi. The expected
//! qualitative outcome is offline ≥ online ≥ smoothed argmax.

use crate::error::{Error, Result};
use crate::hmm::{self, HmmModel};
use crate::metrics;
use crate::sequence::{argmax_labels, LabelSequence, ObservationSequence};
use crate::smoothing::{smooth, SmoothingConfig};

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Margin used when scoring harness runs, in seconds.
const EVAL_MARGIN_SECONDS: f64 = 10.0;

/// Synthetic scenario shape and sampling seed.
///
/// Deserialization fills omitted fields from [`Default`], so a config file
/// only needs the fields it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Hidden states `K`.
    pub classes: usize,
    /// Observation dimension `D`.
    pub dims: usize,
    /// Frames per sampled sequence `T`.
    pub frames: usize,
    pub train_sequences: usize,
    pub test_sequences: usize,
    /// Emission covariance is `noise_scale * I`.
    pub noise_scale: f64,
    /// Expected frames spent in each non-final state.
    pub dwell: f64,
    /// Causal smoothing window applied before every predictor.
    pub smoothing_window: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            classes: 8,
            dims: 8,
            frames: 2000,
            train_sequences: 8,
            test_sequences: 4,
            noise_scale: 2.0,
            dwell: 200.0,
            smoothing_window: SmoothingConfig::DEFAULT_WINDOW,
            seed: 7,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if self.classes == 0 {
            return bad("classes must be at least 1");
        }
        if self.dims == 0 {
            return bad("dims must be at least 1");
        }
        if self.frames == 0 {
            return bad("frames must be at least 1");
        }
        if self.train_sequences == 0 || self.test_sequences == 0 {
            return bad("train and test sequence counts must be at least 1");
        }
        if !(self.noise_scale.is_finite() && self.noise_scale > 0.0) {
            return bad("noise_scale must be positive and finite");
        }
        if !(self.dwell.is_finite() && self.dwell >= 1.0) {
            return bad("dwell must be at least 1");
        }
        if self.smoothing_window == 0 {
            return bad("smoothing_window must be at least 1");
        }
        Ok(())
    }
}

/// Builds the ground-truth model a scenario samples from.
///
/// Transitions form a forward chain: each non-final state keeps probability
/// `1 - 1/dwell` and advances with `1/dwell`; the last state is absorbing.
/// The start distribution is concentrated on state 0. Mean vectors are unit
/// separated (state `k` puts `1 + floor(k/D)` in coordinate `k mod D`) and
/// every covariance is `noise_scale * I`.
pub fn build_scenario(cfg: &ScenarioConfig) -> Result<HmmModel> {
    cfg.validate()?;
    let k = cfg.classes;
    let d = cfg.dims;

    let mut initial = vec![0.0; k];
    initial[0] = 1.0;

    let advance = 1.0 / cfg.dwell;
    let mut transition = vec![0.0; k * k];
    for i in 0..k {
        if i + 1 < k {
            transition[i * k + i] = 1.0 - advance;
            transition[i * k + i + 1] = advance;
        } else {
            transition[i * k + i] = 1.0;
        }
    }

    let mut means = vec![0.0; k * d];
    for s in 0..k {
        means[s * d + s % d] = 1.0 + (s / d) as f64;
    }

    let mut covariances = vec![0.0; k * d * d];
    for s in 0..k {
        for i in 0..d {
            covariances[s * d * d + i * d + i] = cfg.noise_scale;
        }
    }

    HmmModel::new(initial, transition, means, covariances)
}

/// Ground-truth model plus the raw splits sampled from it.
#[derive(Debug, Clone)]
pub struct ScenarioDataset {
    pub model: HmmModel,
    pub train: Vec<(LabelSequence, ObservationSequence)>,
    pub test: Vec<(LabelSequence, ObservationSequence)>,
}

/// Samples the training and test splits a scenario defines.
///
/// Observations are raw model emissions; smoothing is left to the consumer.
/// Train and test draws use separate seed streams, so resizing one split
/// never changes the other split's content.
pub fn sample_dataset(cfg: &ScenarioConfig) -> Result<ScenarioDataset> {
    let model = build_scenario(cfg)?;
    let draw = |stream: u64, n: usize| {
        (0..n)
            .map(|i| model.sample(cfg.frames, derive_seed(cfg.seed, stream, i as u64)))
            .collect()
    };
    let train = draw(1, cfg.train_sequences);
    let test = draw(2, cfg.test_sequences);
    Ok(ScenarioDataset { model, train, test })
}

/// Accuracy and mean margin-Jaccard for one predictor, both percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodScores {
    pub accuracy: f64,
    pub jaccard_mean: f64,
}

/// One harness run: the three predictors on a common test split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentResult {
    pub smoothed_argmax: MethodScores,
    pub hmm_online: MethodScores,
    pub hmm_offline: MethodScores,
}

/// How many runs kept the expected quality ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderingTally {
    /// Runs with offline accuracy ≥ online accuracy ≥ argmax accuracy.
    pub accuracy_ordered: usize,
    /// Same ordering on mean Jaccard.
    pub jaccard_ordered: usize,
    pub runs: usize,
}

/// Samples a scenario, fits a model on its training split, and scores the
/// three predictors on its test split.
///
/// Ground truth and fitted model consume the same smoothed representation:
/// training observations are smoothed before fitting, test observations
/// before decoding. Scores are averaged over test sequences, unweighted.
/// Requires `dims == classes` because the argmax baseline reads the score
/// vector as per-class evidence.
pub fn run_experiment(cfg: &ScenarioConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    if cfg.dims != cfg.classes {
        return Err(Error::InvalidParameter(format!(
            "argmax baseline needs dims = classes, got D = {} and K = {}",
            cfg.dims, cfg.classes
        )));
    }
    let data = sample_dataset(cfg)?;
    let window = SmoothingConfig::new(cfg.smoothing_window)?;

    let mut train_obs = Vec::with_capacity(data.train.len());
    let mut train_labels = Vec::with_capacity(data.train.len());
    for (labels, obs) in data.train {
        train_obs.push(smooth(&obs, &window));
        train_labels.push(labels);
    }
    let model = hmm::fit(&train_obs, &train_labels, cfg.classes, &hmm::FitOptions::default())?;

    let mut totals = [MethodScores {
        accuracy: 0.0,
        jaccard_mean: 0.0,
    }; 3];
    for (gt, obs) in &data.test {
        let smoothed = smooth(obs, &window);

        let by_argmax = argmax_labels(&smoothed, cfg.classes)?;
        let by_online = decode_online(&model, &smoothed)?;
        let by_offline = model.viterbi_offline(&smoothed)?.states;

        for (total, pred) in totals.iter_mut().zip([&by_argmax, &by_online, &by_offline]) {
            let report = metrics::summarize(pred, gt, cfg.classes, EVAL_MARGIN_SECONDS)?;
            total.accuracy += report.accuracy;
            total.jaccard_mean += report.jaccard_mean;
        }
    }
    let n = cfg.test_sequences as f64;
    for total in totals.iter_mut() {
        total.accuracy /= n;
        total.jaccard_mean /= n;
    }
    Ok(ExperimentResult {
        smoothed_argmax: totals[0],
        hmm_online: totals[1],
        hmm_offline: totals[2],
    })
}

fn decode_online(model: &HmmModel, obs: &ObservationSequence) -> Result<LabelSequence> {
    let mut decoder = model.online_decoder();
    let mut states = Vec::with_capacity(obs.len());
    for row in obs.rows() {
        states.push(decoder.step(row)?);
    }
    LabelSequence::new(states, obs.fps())
}

/// Runs the experiment on `runs` consecutive seeds starting at `cfg.seed`.
///
/// Runs are independent and execute in parallel when the `parallel` feature
/// is enabled; results are returned in seed order either way.
pub fn run_seeds(cfg: &ScenarioConfig, runs: usize) -> Result<Vec<ExperimentResult>> {
    let run_one = |i: usize| {
        let mut c = cfg.clone();
        c.seed = cfg.seed.wrapping_add(i as u64);
        run_experiment(&c)
    };
    #[cfg(feature = "parallel")]
    {
        (0..runs).into_par_iter().map(run_one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..runs).map(run_one).collect()
    }
}

/// Counts runs preserving offline ≥ online ≥ argmax.
pub fn ordering_tally(results: &[ExperimentResult]) -> OrderingTally {
    let mut tally = OrderingTally {
        accuracy_ordered: 0,
        jaccard_ordered: 0,
        runs: results.len(),
    };
    for r in results {
        if r.hmm_offline.accuracy >= r.hmm_online.accuracy
            && r.hmm_online.accuracy >= r.smoothed_argmax.accuracy
        {
            tally.accuracy_ordered += 1;
        }
        if r.hmm_offline.jaccard_mean >= r.hmm_online.jaccard_mean
            && r.hmm_online.jaccard_mean >= r.smoothed_argmax.jaccard_mean
        {
            tally.jaccard_ordered += 1;
        }
    }
    tally
}

/// Mixes `(base, stream, index)` into an independent sampling seed
/// (SplitMix64 finalizer).
fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
