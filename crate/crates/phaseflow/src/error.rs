//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("frame rates differ: {left} Hz vs {right} Hz")]
    FpsMismatch { left: f64, right: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("prefix length {requested} exceeds sequence length {len}")]
    OutOfRange { requested: usize, len: usize },

    #[error("label {label} out of range for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no non-empty label sequences provided")]
    EmptyInput,

    #[error("state {0} has no assigned frames")]
    UnseenState(usize),

    #[error(
        "covariance for state {state} is not positive definite even with \
         regularization epsilon {max_epsilon}"
    )]
    DegenerateCovariance { state: usize, max_epsilon: f64 },

    #[error("cannot decode an empty observation sequence")]
    EmptySequence,

    #[error("no feasible state path: every prefix score is -inf at frame {frame}")]
    NoFeasiblePath { frame: usize },

    #[error("online decoder has not consumed any frames yet")]
    NoFramesSeen,

    #[error("cannot evaluate empty sequences")]
    EmptySequences,

    #[error("cannot pad an empty sequence to {target} frames")]
    EmptyInputWithPositiveTarget { target: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("non-contiguous frame index at line {line}: expected {expected}, got {actual}")]
    NonContiguousFrames { line: u64, expected: usize, actual: usize },

    #[error("ragged row at line {line}: expected {expected} values, got {actual}")]
    RaggedRows { line: u64, expected: usize, actual: usize },

    #[error("unsupported schema version {found} (this build reads version {supported})")]
    UnsupportedSchemaVersion { found: u64, supported: u64 },

    #[error("model invariant violated: {0}")]
    InvariantViolation(String),
}
