//! Temporal smoothing and HMM decoding for per-frame phase classifiers.
//!
//! Image classifiers score surgical video frame by frame; read in
//! isolation, those scores flicker between phases. This crate turns them
//! into coherent phase timelines:
//!
//! 1. [`smoothing`] averages each score vector over a causal window
//!    (default 15 frames at 1 Hz), damping single-frame noise without
//!    looking ahead.
//! 2. [`hmm`] fits a Gaussian-emission hidden Markov model from labeled
//!    sequences by counting and decodes with offline Viterbi or an online
//!    prefix decoder whose per-frame output equals the offline pass over
//!    the same prefix, bit for bit.
//! 3. [`metrics`] scores predictions with exact frame accuracy and a
//!    margin-tolerant per-class Jaccard index.
//! 4. [`dataio`] reads and writes the CSV/JSONL interchange formats, saves
//!    models losslessly as JSON, and upsamples 1 Hz predictions back to
//!    native video frame rates.
//! 5. [`synthgen`] reproduces the qualitative benchmark on synthetic data:
//!    offline decoding ≥ online decoding ≥ smoothed argmax.
//!
//! # Example
//!
//! ```
//! use phaseflow::{
//!     fit, smooth, FitOptions, LabelSequence, ObservationSequence, SmoothingConfig,
//! };
//!
//! # fn main() -> phaseflow::Result<()> {
//! // Two noisy two-class score sequences with known labels.
//! let obs = ObservationSequence::from_rows(
//!     &[vec![1.1, 0.2], vec![0.8, -0.1], vec![0.1, 0.9], vec![-0.2, 1.2]],
//!     1.0,
//! )?;
//! let labels = LabelSequence::new(vec![0, 0, 1, 1], 1.0)?;
//!
//! let smoothed = smooth(&obs, &SmoothingConfig::new(2)?);
//! let model = fit(
//!     std::slice::from_ref(&smoothed),
//!     std::slice::from_ref(&labels),
//!     2,
//!     &FitOptions::default(),
//! )?;
//!
//! // Decode the sequence we trained on; it should reproduce the labels.
//! let decoded = model.viterbi_offline(&smoothed)?;
//! assert_eq!(decoded.states.labels(), labels.labels());
//!
//! // The online decoder sees one frame at a time and agrees at the end.
//! let mut online = model.online_decoder();
//! let mut last = 0;
//! for row in smoothed.rows() {
//!     last = online.step(row)?;
//! }
//! assert_eq!(last, *decoded.states.labels().last().unwrap());
//! # Ok(())
//! # }
//! ```

pub mod dataio;
pub mod error;
pub mod hmm;
pub mod metrics;
pub mod sequence;
pub mod smoothing;
pub mod synthgen;

mod gaussian;

pub use error::{Error, Result};
pub use hmm::{
    fit, fit_emissions, fit_initial, fit_transitions, CovarianceKind, DecodeResult, FitOptions,
    HmmModel, OnlineDecoder,
};
pub use metrics::{accuracy, dump_frames, jaccard_per_class, summarize, EvalReport, FrameRecord};
pub use sequence::{
    argmax_labels, validate_pair, LabelSequence, ObservationSequence, PhaseSet,
};
pub use smoothing::{smooth, smooth_seq, CausalSmoother, SmoothingConfig};
pub use synthgen::{
    build_scenario, ordering_tally, run_experiment, run_seeds, sample_dataset, ExperimentResult,
    MethodScores, OrderingTally, ScenarioConfig, ScenarioDataset,
};
