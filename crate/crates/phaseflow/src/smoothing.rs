//! Causal sliding-window averaging of per-frame score vectors.
//!
//! Output frame `t` is the arithmetic mean of input frames
//! `max(0, t - w + 1)..=t`, so early frames average only what has been seen.
//! Each output row is computed as a fresh sum over its window rather than by
//! updating a running total; this keeps results independent of sequence
//! length and identical between the batch, streaming, and parallel paths.

use crate::error::{Error, Result};
use crate::sequence::ObservationSequence;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use std::collections::VecDeque;

/// Window length for causal smoothing, in frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothingConfig {
    window: usize,
}

impl SmoothingConfig {
    /// Default window length in frames (15 s at the 1 Hz analysis rate).
    pub const DEFAULT_WINDOW: usize = 15;

    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParameter(
                "smoothing window must be at least 1 frame".into(),
            ));
        }
        Ok(Self { window })
    }

    pub fn window(&self) -> usize {
        self.window
    }
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            window: Self::DEFAULT_WINDOW,
        }
    }
}

/// Smooths every frame of `obs` with a causal mean window.
///
/// With the `parallel` feature enabled the output rows are computed across
/// threads; each row's arithmetic is unchanged, so the result is identical
/// to [`smooth_seq`].
pub fn smooth(obs: &ObservationSequence, config: &SmoothingConfig) -> ObservationSequence {
    #[cfg(feature = "parallel")]
    {
        let dims = obs.dims();
        let mut out = vec![0.0; obs.len() * dims];
        out.par_chunks_exact_mut(dims)
            .enumerate()
            .for_each(|(t, row)| mean_into(obs, t, config.window, row));
        ObservationSequence::new(out, dims, obs.fps())
            .expect("mean of finite rows is finite")
    }
    #[cfg(not(feature = "parallel"))]
    {
        smooth_seq(obs, config)
    }
}

/// Single-threaded smoothing kernel; always compiled, byte-identical output
/// to [`smooth`].
pub fn smooth_seq(obs: &ObservationSequence, config: &SmoothingConfig) -> ObservationSequence {
    let dims = obs.dims();
    let mut out = vec![0.0; obs.len() * dims];
    for (t, row) in out.chunks_exact_mut(dims).enumerate() {
        mean_into(obs, t, config.window, row);
    }
    ObservationSequence::new(out, dims, obs.fps()).expect("mean of finite rows is finite")
}

/// Writes the causal window mean for frame `t` into `out`.
///
/// Sums window rows in ascending frame order; the streaming smoother mirrors
/// this order exactly.
fn mean_into(obs: &ObservationSequence, t: usize, window: usize, out: &mut [f64]) {
    let start = (t + 1).saturating_sub(window);
    out.fill(0.0);
    for u in start..=t {
        for (o, v) in out.iter_mut().zip(obs.row(u)) {
            *o += v;
        }
    }
    let n = (t - start + 1) as f64;
    for o in out.iter_mut() {
        *o /= n;
    }
}

/// Incremental causal smoother for frame-at-a-time pipelines.
///
/// Feeding rows in order yields exactly the rows `smooth` would produce for
/// the full sequence.
#[derive(Debug, Clone)]
pub struct CausalSmoother {
    window: usize,
    dims: usize,
    buf: VecDeque<Vec<f64>>,
}

impl CausalSmoother {
    pub fn new(config: &SmoothingConfig, dims: usize) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidParameter(
                "observation dimension must be at least 1".into(),
            ));
        }
        Ok(Self {
            window: config.window(),
            dims,
            buf: VecDeque::with_capacity(config.window()),
        })
    }

    /// Absorbs one frame and returns the smoothed row for it.
    pub fn push(&mut self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                actual: row.len(),
            });
        }
        if self.buf.len() == self.window {
            self.buf.pop_front();
        }
        self.buf.push_back(row.to_vec());

        let mut out = vec![0.0; self.dims];
        for past in &self.buf {
            for (o, v) in out.iter_mut().zip(past) {
                *o += v;
            }
        }
        let n = self.buf.len() as f64;
        for o in out.iter_mut() {
            *o /= n;
        }
        Ok(out)
    }

    /// Frames currently buffered (saturates at the window length).
    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    pub fn reset(&mut self) {
        self.buf.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::ObservationSequence;

    fn seq(rows: &[Vec<f64>]) -> ObservationSequence {
        ObservationSequence::from_rows(rows, 1.0).unwrap()
    }

    #[test]
    fn window_zero_is_rejected() {
        assert!(SmoothingConfig::new(0).is_err());
        assert_eq!(SmoothingConfig::default().window(), 15);
    }

    #[test]
    fn warm_up_averages_available_frames() {
        let o = seq(&[vec![0.0, 2.0], vec![2.0, 4.0], vec![4.0, 0.0]]);
        let cfg = SmoothingConfig::new(3).unwrap();
        let s = smooth(&o, &cfg);
        assert_eq!(s.row(0), &[0.0, 2.0]);
        assert_eq!(s.row(1), &[1.0, 3.0]);
        assert_eq!(s.row(2), &[2.0, 2.0]);
    }

    #[test]
    fn window_one_is_identity() {
        let o = seq(&[vec![1.5, -2.0], vec![0.25, 9.0]]);
        let cfg = SmoothingConfig::new(1).unwrap();
        assert_eq!(smooth(&o, &cfg), o);
    }

    #[test]
    fn window_longer_than_sequence_averages_prefix() {
        let o = seq(&[vec![1.0], vec![3.0]]);
        let cfg = SmoothingConfig::new(100).unwrap();
        let s = smooth(&o, &cfg);
        assert_eq!(s.row(0), &[1.0]);
        assert_eq!(s.row(1), &[2.0]);
    }

    #[test]
    fn constant_sequence_is_a_fixed_point() {
        // Dyadic values keep every partial sum exact, so equality is exact.
        let o = seq(&vec![vec![0.75, -1.25]; 40]);
        let cfg = SmoothingConfig::default();
        assert_eq!(smooth(&o, &cfg), o);
    }

    #[test]
    fn empty_sequence_stays_empty() {
        let o = ObservationSequence::empty(3, 1.0).unwrap();
        let s = smooth(&o, &SmoothingConfig::default());
        assert!(s.is_empty());
        assert_eq!(s.dims(), 3);
    }

    #[test]
    fn causality_ignores_future_frames() {
        // Two sequences sharing a prefix must smooth identically on it.
        let a = seq(&[vec![1.0], vec![2.0], vec![3.0], vec![100.0]]);
        let b = seq(&[vec![1.0], vec![2.0], vec![3.0], vec![-100.0]]);
        let cfg = SmoothingConfig::new(2).unwrap();
        let sa = smooth(&a, &cfg);
        let sb = smooth(&b, &cfg);
        for t in 0..3 {
            assert_eq!(sa.row(t), sb.row(t));
        }
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let rows: Vec<Vec<f64>> = (0..257)
            .map(|t| {
                (0..5)
                    .map(|d| ((t * 31 + d * 7) as f64 * 0.1).sin() * 3.0)
                    .collect()
            })
            .collect();
        let o = seq(&rows);
        let cfg = SmoothingConfig::default();
        let par = smooth(&o, &cfg);
        let sq = smooth_seq(&o, &cfg);
        assert_eq!(par.as_slice().len(), sq.as_slice().len());
        for (a, b) in par.as_slice().iter().zip(sq.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn streaming_matches_batch_bitwise() {
        let rows: Vec<Vec<f64>> = (0..64)
            .map(|t| (0..3).map(|d| ((t + d) as f64).cos() * 2.5).collect())
            .collect();
        let o = seq(&rows);
        let cfg = SmoothingConfig::new(15).unwrap();
        let batch = smooth(&o, &cfg);

        let mut stream = CausalSmoother::new(&cfg, 3).unwrap();
        for (t, row) in o.rows().enumerate() {
            let got = stream.push(row).unwrap();
            for (a, b) in got.iter().zip(batch.row(t)) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn streaming_checks_row_width() {
        let cfg = SmoothingConfig::default();
        let mut s = CausalSmoother::new(&cfg, 2).unwrap();
        assert!(s.push(&[1.0]).is_err());
        assert!(s.push(&[1.0, 2.0]).is_ok());
        assert_eq!(s.buffered(), 1);
        s.reset();
        assert_eq!(s.buffered(), 0);
    }
}
