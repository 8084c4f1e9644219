//! Offline Viterbi decoding and its online prefix counterpart.
//!
//! Both decoders run the same recurrence in the same arithmetic order:
//! score of state `s` at frame `t` is
//! `max_j(score[j] + ln A[j][s]) + ln b_s(y_t)`, with the maximum scanned in
//! ascending state order and replaced only on strictly greater values. The
//! online decoder therefore reports, after each frame, exactly the last
//! state of the offline Viterbi path for the prefix seen so far, bit for
//! bit. Ties resolve to the lowest state index in every scan.

use crate::error::{Error, Result};
use crate::hmm::HmmModel;
use crate::sequence::{LabelSequence, ObservationSequence};

/// Offline decoding output: the best path and its joint log-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub states: LabelSequence,
    /// `ln p(path, observations)` of the returned path.
    pub log_joint: f64,
}

impl HmmModel {
    /// Most probable state path for a whole sequence (Viterbi).
    ///
    /// Errors with [`Error::EmptySequence`] when `obs` has no frames and
    /// [`Error::DimensionMismatch`] when widths disagree.
    pub fn viterbi_offline(&self, obs: &ObservationSequence) -> Result<DecodeResult> {
        if obs.is_empty() {
            return Err(Error::EmptySequence);
        }
        let logb = self.log_emission_matrix(obs)?;
        let (path, log_joint) = viterbi_from_log_emissions(
            self.log_initial(),
            self.log_transition(),
            self.k(),
            &logb,
            obs.len(),
        )?;
        Ok(DecodeResult {
            states: LabelSequence::new(path, obs.fps())?,
            log_joint,
        })
    }

    /// Starts an online decoder over this model.
    pub fn online_decoder(&self) -> OnlineDecoder<'_> {
        OnlineDecoder {
            model: self,
            scores: vec![0.0; self.k()],
            next: vec![0.0; self.k()],
            scratch: vec![0.0; self.dims()],
            frames: 0,
        }
    }
}

/// Viterbi over precomputed log emission densities.
///
/// `logb` is `t x k` row-major. Returns the best path and its score.
pub(crate) fn viterbi_from_log_emissions(
    log_initial: &[f64],
    log_transition: &[f64],
    k: usize,
    logb: &[f64],
    t: usize,
) -> Result<(Vec<usize>, f64)> {
    debug_assert_eq!(logb.len(), t * k);
    if t == 0 {
        return Err(Error::EmptySequence);
    }

    let mut delta = vec![0.0; k];
    let mut next = vec![0.0; k];
    // Backpointers for frames 1..t; entry (u, s) is the best predecessor of
    // state s at frame u.
    let mut back = vec![0u32; t.saturating_sub(1) * k];

    for s in 0..k {
        delta[s] = log_initial[s] + logb[s];
    }
    check_feasible(&delta, 0)?;

    for u in 1..t {
        let row = &logb[u * k..(u + 1) * k];
        let bp = &mut back[(u - 1) * k..u * k];
        for s in 0..k {
            let mut best = delta[0] + log_transition[s];
            let mut arg = 0u32;
            for j in 1..k {
                let v = delta[j] + log_transition[j * k + s];
                if v > best {
                    best = v;
                    arg = j as u32;
                }
            }
            next[s] = best + row[s];
            bp[s] = arg;
        }
        std::mem::swap(&mut delta, &mut next);
        check_feasible(&delta, u)?;
    }

    let last = argmax(&delta);
    let log_joint = delta[last];
    let mut path = vec![0usize; t];
    path[t - 1] = last;
    for u in (1..t).rev() {
        path[u - 1] = back[(u - 1) * k + path[u]] as usize;
    }
    Ok((path, log_joint))
}

fn check_feasible(delta: &[f64], frame: usize) -> Result<()> {
    if delta.iter().all(|&v| v == f64::NEG_INFINITY) {
        return Err(Error::NoFeasiblePath { frame });
    }
    Ok(())
}

/// Lowest index of the maximum value.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Frame-at-a-time prefix decoder.
///
/// Each [`step`] absorbs one observation and returns the last state of the
/// offline Viterbi path for all frames seen so far. Memory is `O(K)` and a
/// step costs `O(K^2 + K D^2)` regardless of how many frames have passed.
///
/// [`step`]: Self::step
#[derive(Debug, Clone)]
pub struct OnlineDecoder<'m> {
    model: &'m HmmModel,
    scores: Vec<f64>,
    next: Vec<f64>,
    scratch: Vec<f64>,
    frames: usize,
}

impl OnlineDecoder<'_> {
    /// Absorbs one frame and returns the current most probable state.
    pub fn step(&mut self, y: &[f64]) -> Result<usize> {
        let m = self.model;
        let k = m.k();
        if y.len() != m.dims() {
            return Err(Error::DimensionMismatch {
                expected: m.dims(),
                actual: y.len(),
            });
        }

        if self.frames == 0 {
            for s in 0..k {
                self.scores[s] =
                    m.log_initial()[s] + m.log_emission_into(s, y, &mut self.scratch);
            }
        } else {
            let log_a = m.log_transition();
            for s in 0..k {
                let mut best = self.scores[0] + log_a[s];
                for j in 1..k {
                    let v = self.scores[j] + log_a[j * k + s];
                    if v > best {
                        best = v;
                    }
                }
                self.next[s] = best + m.log_emission_into(s, y, &mut self.scratch);
            }
            std::mem::swap(&mut self.scores, &mut self.next);
        }
        check_feasible(&self.scores, self.frames)?;
        self.frames += 1;
        Ok(argmax(&self.scores))
    }

    /// Most probable state after the last absorbed frame.
    ///
    /// Errors with [`Error::NoFramesSeen`] before the first [`step`].
    ///
    /// [`step`]: Self::step
    pub fn current_state(&self) -> Result<usize> {
        if self.frames == 0 {
            return Err(Error::NoFramesSeen);
        }
        Ok(argmax(&self.scores))
    }

    pub fn frames_seen(&self) -> usize {
        self.frames
    }

    /// Forgets all absorbed frames.
    pub fn reset(&mut self) {
        self.frames = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::tests::toy_model;
    use crate::sequence::ObservationSequence;

    fn obs(rows: &[Vec<f64>]) -> ObservationSequence {
        ObservationSequence::from_rows(rows, 1.0).unwrap()
    }

    #[test]
    fn decodes_a_hand_checked_path() {
        let m = toy_model();
        let o = obs(&[vec![0.0, 0.0], vec![3.0, 3.0]]);
        let r = m.viterbi_offline(&o).unwrap();
        assert_eq!(r.states.labels(), &[0, 1]);
        // ln pi_0 + b_0(y0) + ln A_01 + b_1(y1), both emissions at the mean.
        let want = 2.0 * -(2.0 * std::f64::consts::PI).ln() + 0.1f64.ln();
        assert!((r.log_joint - want).abs() < 1e-12);
    }

    #[test]
    fn zero_initial_probability_blocks_a_state() {
        let m = toy_model();
        // Observation favors state 1, but pi_1 = 0 forces a start in 0.
        let o = obs(&[vec![3.0, 3.0]]);
        let r = m.viterbi_offline(&o).unwrap();
        assert_eq!(r.states.labels(), &[0]);
    }

    #[test]
    fn absorbing_state_cannot_be_left() {
        let m = toy_model();
        // Frames 0 and 1 pull the path into state 1. Frame 2 emits closer
        // to state 0's mean, but A[1][0] = 0 forbids returning, so the
        // decoder must keep state 1 rather than take the better emission.
        let o = obs(&[vec![3.0, 3.0], vec![3.0, 3.0], vec![1.2, 1.2]]);
        assert_eq!(argmax_emission(&m, &[1.2, 1.2]), 0);
        let r = m.viterbi_offline(&o).unwrap();
        assert_eq!(r.states.labels(), &[0, 1, 1]);
    }

    fn argmax_emission(m: &HmmModel, y: &[f64]) -> usize {
        (0..m.k())
            .max_by(|&a, &b| {
                m.log_emission(a, y)
                    .partial_cmp(&m.log_emission(b, y))
                    .unwrap()
            })
            .unwrap()
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let m = toy_model();
        let o = ObservationSequence::empty(2, 1.0).unwrap();
        assert!(matches!(
            m.viterbi_offline(&o),
            Err(Error::EmptySequence)
        ));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = toy_model();
        let o = obs(&[vec![0.0, 0.0, 0.0]]);
        assert!(matches!(
            m.viterbi_offline(&o),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ties_resolve_to_the_lowest_state() {
        // Fully symmetric model: every path scores the same.
        let m = HmmModel::new(
            vec![0.5, 0.5],
            vec![0.5, 0.5, 0.5, 0.5],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let o = obs(&[vec![0.0], vec![0.0], vec![0.0]]);
        let r = m.viterbi_offline(&o).unwrap();
        assert_eq!(r.states.labels(), &[0, 0, 0]);

        let mut dec = m.online_decoder();
        for row in o.rows() {
            assert_eq!(dec.step(row).unwrap(), 0);
        }
    }

    #[test]
    fn kernel_is_shift_invariant() {
        // Adding a constant to every log emission shifts the score by t * c
        // and leaves the path unchanged.
        let m = toy_model();
        let o = obs(&[vec![0.5, -0.5], vec![2.0, 2.5], vec![3.1, 2.9]]);
        let logb = m.log_emission_matrix(&o).unwrap();
        let (path, score) = viterbi_from_log_emissions(
            m.log_initial(),
            m.log_transition(),
            m.k(),
            &logb,
            o.len(),
        )
        .unwrap();

        let c = 7.5;
        let shifted: Vec<f64> = logb.iter().map(|v| v + c).collect();
        let (path2, score2) = viterbi_from_log_emissions(
            m.log_initial(),
            m.log_transition(),
            m.k(),
            &shifted,
            o.len(),
        )
        .unwrap();
        assert_eq!(path, path2);
        assert!((score2 - (score + o.len() as f64 * c)).abs() < 1e-9);
    }

    #[test]
    fn kernel_reports_infeasible_frame() {
        let neg = f64::NEG_INFINITY;
        // Start distribution gives no mass anywhere.
        let r = viterbi_from_log_emissions(&[neg], &[0.0], 1, &[0.0], 1);
        assert!(matches!(r, Err(Error::NoFeasiblePath { frame: 0 })));
        // Feasible start, impossible transition.
        let r = viterbi_from_log_emissions(&[0.0], &[neg], 1, &[0.0, 0.0], 2);
        assert!(matches!(r, Err(Error::NoFeasiblePath { frame: 1 })));
    }

    #[test]
    fn online_matches_offline_prefixes_bitwise() {
        let m = toy_model();
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|t| {
                let drift = t as f64 / 13.0;
                vec![(t as f64 * 0.7).sin() + drift, (t as f64 * 0.3).cos() + drift]
            })
            .collect();
        let o = obs(&rows);

        let mut dec = m.online_decoder();
        for t in 1..=o.len() {
            let online = dec.step(o.row(t - 1)).unwrap();
            let offline = m.viterbi_offline(&o.prefix(t).unwrap()).unwrap();
            assert_eq!(online, *offline.states.labels().last().unwrap(), "prefix {t}");
            assert_eq!(dec.current_state().unwrap(), online);
        }
        assert_eq!(dec.frames_seen(), o.len());
    }

    #[test]
    fn online_decoder_lifecycle() {
        let m = toy_model();
        let mut dec = m.online_decoder();
        assert!(matches!(dec.current_state(), Err(Error::NoFramesSeen)));
        assert!(matches!(
            dec.step(&[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(dec.frames_seen(), 0);

        dec.step(&[0.0, 0.0]).unwrap();
        assert_eq!(dec.frames_seen(), 1);
        dec.reset();
        assert_eq!(dec.frames_seen(), 0);
        assert!(dec.current_state().is_err());
        // After reset the decoder starts from the initial distribution again.
        assert_eq!(dec.step(&[0.0, 0.0]).unwrap(), 0);
    }
}
