//! Frame-indexed sequence types and the phase vocabulary.
//!
//! An [`ObservationSequence`] holds one real-valued vector per frame
//! (typically classifier log-probabilities), a [`LabelSequence`] holds one
//! phase index per frame, and a [`PhaseSet`] maps phase indices to names.
//! Both sequence types carry their own frame rate so data sampled at the
//! analysis rate (1 Hz) and at the raw video rate (25 Hz) can coexist
//! without a global configuration.

use crate::error::{Error, Result};

/// Ordered phase vocabulary: index `k` maps to `names[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseSet {
    names: Vec<String>,
}

impl PhaseSet {
    /// Builds a phase set from unique, non-empty names.
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::InvalidParameter(
                "phase set needs at least one phase".into(),
            ));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "phase {i} has an empty name"
                )));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate phase name {name:?}"
                )));
            }
        }
        Ok(Self { names })
    }

    /// The eight phases of a laparoscopic cholecystectomy, in operative order.
    pub fn cholecystectomy() -> Self {
        Self::new([
            "TrocarPlacement",
            "Preparation",
            "CalotTriangleDissection",
            "ClippingCutting",
            "GallbladderDissection",
            "GallbladderPackaging",
            "CleaningCoagulation",
            "GallbladderRetraction",
        ])
        .expect("fixed names are unique and non-empty")
    }

    /// Generic `phase0..phase{k-1}` vocabulary for synthetic data.
    pub fn numbered(k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| format!("phase{i}")))
    }

    /// Number of phases `K`.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    /// Always false; a phase set holds at least one phase.
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, k: usize) -> Option<&str> {
        self.names.get(k).map(String::as_str)
    }

    /// Index of an exact phase-name string.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// A `T x D` matrix of per-frame feature vectors at a known frame rate.
///
/// Rows are stored contiguously (row-major). Every entry is finite; this is
/// checked at construction so downstream numeric code never sees NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSequence {
    data: Vec<f64>,
    dims: usize,
    fps: f64,
}

impl ObservationSequence {
    /// Wraps a row-major buffer of `T * dims` finite values.
    pub fn new(data: Vec<f64>, dims: usize, fps: f64) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidParameter(
                "observation dimension must be at least 1".into(),
            ));
        }
        check_fps(fps)?;
        if !data.len().is_multiple_of(dims) {
            return Err(Error::InvalidParameter(format!(
                "buffer length {} is not a multiple of dimension {dims}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at frame {}, column {}",
                i / dims,
                i % dims
            )));
        }
        Ok(Self { data, dims, fps })
    }

    /// Empty sequence (`T = 0`) with a known dimension.
    pub fn empty(dims: usize, fps: f64) -> Result<Self> {
        Self::new(Vec::new(), dims, fps)
    }

    /// Builds from per-frame rows; all rows must share one width.
    pub fn from_rows(rows: &[Vec<f64>], fps: f64) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidParameter(
                "cannot infer dimension from zero rows; use ObservationSequence::empty".into(),
            ));
        };
        let dims = first.len();
        let mut data = Vec::with_capacity(rows.len() * dims);
        for row in rows {
            if row.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, dims, fps)
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.data.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Observation dimension `D`.
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// Row `t` as a slice of length `D`.
    ///
    /// # Panics
    ///
    /// Panics if `t >= len()`.
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dims..(t + 1) * self.dims]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dims)
    }

    /// The underlying row-major buffer.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// First `t` frames, same dimension and frame rate.
    pub fn prefix(&self, t: usize) -> Result<Self> {
        if t > self.len() {
            return Err(Error::OutOfRange {
                requested: t,
                len: self.len(),
            });
        }
        Ok(Self {
            data: self.data[..t * self.dims].to_vec(),
            dims: self.dims,
            fps: self.fps,
        })
    }
}

/// Per-frame phase indices at a known frame rate.
///
/// The sequence itself does not know `K`; operations that interpret labels
/// against a phase vocabulary check the range explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSequence {
    labels: Vec<usize>,
    fps: f64,
}

impl LabelSequence {
    pub fn new(labels: Vec<usize>, fps: f64) -> Result<Self> {
        check_fps(fps)?;
        Ok(Self { labels, fps })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Errors with [`Error::InvalidLabel`] if any label is `>= classes`.
    pub fn check_range(&self, classes: usize) -> Result<()> {
        match self.labels.iter().find(|&&l| l >= classes) {
            Some(&label) => Err(Error::InvalidLabel { label, classes }),
            None => Ok(()),
        }
    }
}

fn check_fps(fps: f64) -> Result<()> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "frame rate must be positive and finite, got {fps}"
        )));
    }
    Ok(())
}

/// Checks that an observation/label pair covers the same frames.
pub fn validate_pair(obs: &ObservationSequence, labels: &LabelSequence) -> Result<()> {
    if obs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: obs.len(),
            right: labels.len(),
        });
    }
    if obs.fps() != labels.fps() {
        return Err(Error::FpsMismatch {
            left: obs.fps(),
            right: labels.fps(),
        });
    }
    Ok(())
}

/// Per-row argmax of an observation sequence, interpreted as phase labels.
///
/// Requires `D == classes`; ties resolve to the lowest index so repeated
/// calls on identical input always agree.
pub fn argmax_labels(obs: &ObservationSequence, classes: usize) -> Result<LabelSequence> {
    if obs.dims() != classes {
        return Err(Error::DimensionMismatch {
            expected: classes,
            actual: obs.dims(),
        });
    }
    let labels = obs.rows().map(argmax_row).collect();
    LabelSequence::new(labels, obs.fps())
}

fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}
