//! Supervised HMM parameter estimation from labeled sequences.
//!
//! All estimators are closed-form: the initial distribution and transition
//! matrix come from counting label events, the emissions from per-state
//! sample means and covariances. Accumulation runs in a fixed order
//! (sequence by sequence, frame by frame) so repeated fits of the same data
//! are bit-identical.

use crate::error::{Error, Result};
use crate::gaussian;
use crate::hmm::HmmModel;
use crate::sequence::{validate_pair, LabelSequence, ObservationSequence};

/// Shape of the fitted emission covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceKind {
    /// Full `D x D` sample covariance per state.
    #[default]
    Full,
    /// Per-coordinate variances only; off-diagonals are zeroed.
    Diagonal,
}

/// Options for [`fit`].
#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    pub covariance: CovarianceKind,
}

/// Relative ridge added to a covariance that fails to factorize, as a
/// multiple of its mean diagonal. Escalates by 10x per retry.
const RIDGE_START: f64 = 1e-6;
const RIDGE_MAX: f64 = 1e-2;

/// Estimates the initial distribution from the first label of each sequence.
///
/// `pi[s] = (#sequences starting in s) / (#non-empty sequences)`. Empty
/// sequences contribute nothing; if every sequence is empty the estimate is
/// undefined and [`Error::EmptyInput`] is returned.
pub fn fit_initial(label_seqs: &[LabelSequence], k: usize) -> Result<Vec<f64>> {
    check_k(k)?;
    let mut counts = vec![0usize; k];
    let mut total = 0usize;
    for seq in label_seqs {
        seq.check_range(k)?;
        if let Some(&first) = seq.labels().first() {
            counts[first] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(counts
        .iter()
        .map(|&c| c as f64 / total as f64)
        .collect())
}

/// Estimates the transition matrix from adjacent label pairs.
///
/// `A[i][j] = count(i -> j) / count(i -> any)`, with pairs taken inside
/// each sequence only (no pair spans a sequence boundary). A state with no
/// outgoing pairs gets a uniform row `1/K`; observed rows keep exact zeros
/// for transitions that never occurred.
pub fn fit_transitions(label_seqs: &[LabelSequence], k: usize) -> Result<Vec<f64>> {
    check_k(k)?;
    let mut counts = vec![0u64; k * k];
    for seq in label_seqs {
        seq.check_range(k)?;
        for pair in seq.labels().windows(2) {
            counts[pair[0] * k + pair[1]] += 1;
        }
    }
    let mut a = vec![0.0; k * k];
    for i in 0..k {
        let row = &counts[i * k..(i + 1) * k];
        let total: u64 = row.iter().sum();
        if total == 0 {
            a[i * k..(i + 1) * k].fill(1.0 / k as f64);
        } else {
            for j in 0..k {
                a[i * k + j] = row[j] as f64 / total as f64;
            }
        }
    }
    Ok(a)
}

/// Estimates per-state Gaussian emissions by maximum likelihood.
///
/// Returns `(means, covariances)` shaped `K x D` and `K x D x D`, both
/// row-major. Covariances are the biased MLE (divide by the per-state frame
/// count `N_k`). Every state must be observed at least once, otherwise
/// [`Error::UnseenState`] names the first missing one. A covariance that is
/// not positive definite (for example a state observed once) is repaired
/// with the smallest ridge from the escalation schedule that factorizes;
/// if even the largest ridge fails, [`Error::DegenerateCovariance`].
pub fn fit_emissions(
    obs_seqs: &[ObservationSequence],
    label_seqs: &[LabelSequence],
    k: usize,
    covariance: CovarianceKind,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_k(k)?;
    if obs_seqs.len() != label_seqs.len() {
        return Err(Error::LengthMismatch {
            left: obs_seqs.len(),
            right: label_seqs.len(),
        });
    }
    let d = obs_seqs
        .iter()
        .map(ObservationSequence::dims)
        .next()
        .ok_or(Error::EmptyInput)?;
    for obs in obs_seqs {
        if obs.dims() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: obs.dims(),
            });
        }
    }
    for (obs, labels) in obs_seqs.iter().zip(label_seqs) {
        validate_pair(obs, labels)?;
        labels.check_range(k)?;
    }

    // Pass 1: per-state frame counts and mean vectors.
    let mut counts = vec![0u64; k];
    let mut means = vec![0.0; k * d];
    for (obs, labels) in obs_seqs.iter().zip(label_seqs) {
        for (y, &s) in obs.rows().zip(labels.labels()) {
            counts[s] += 1;
            for (m, v) in means[s * d..(s + 1) * d].iter_mut().zip(y) {
                *m += v;
            }
        }
    }
    if let Some(s) = counts.iter().position(|&c| c == 0) {
        return Err(Error::UnseenState(s));
    }
    for s in 0..k {
        let n = counts[s] as f64;
        for m in means[s * d..(s + 1) * d].iter_mut() {
            *m /= n;
        }
    }

    // Pass 2: centered second moments. Off-diagonal entries are written to
    // both (i, j) and (j, i) from one product, so symmetry is exact.
    let mut covs = vec![0.0; k * d * d];
    for (obs, labels) in obs_seqs.iter().zip(label_seqs) {
        for (y, &s) in obs.rows().zip(labels.labels()) {
            let mean = &means[s * d..(s + 1) * d];
            let cov = &mut covs[s * d * d..(s + 1) * d * d];
            match covariance {
                CovarianceKind::Full => {
                    for i in 0..d {
                        let di = y[i] - mean[i];
                        cov[i * d + i] += di * di;
                        for j in 0..i {
                            let prod = di * (y[j] - mean[j]);
                            cov[i * d + j] += prod;
                            cov[j * d + i] = cov[i * d + j];
                        }
                    }
                }
                CovarianceKind::Diagonal => {
                    for i in 0..d {
                        let di = y[i] - mean[i];
                        cov[i * d + i] += di * di;
                    }
                }
            }
        }
    }
    for s in 0..k {
        let n = counts[s] as f64;
        let cov = &mut covs[s * d * d..(s + 1) * d * d];
        match covariance {
            CovarianceKind::Full => {
                for v in cov.iter_mut() {
                    *v /= n;
                }
            }
            CovarianceKind::Diagonal => {
                for i in 0..d {
                    cov[i * d + i] /= n;
                }
            }
        }
        regularize_in_place(cov, d, s)?;
    }

    Ok((means, covs))
}

/// Replaces `cov` with `cov + eps * scale * I` for the smallest `eps` in
/// the escalation schedule that makes it factorizable; leaves it untouched
/// when it already factorizes. `scale` is `trace / d`, or `1.0` if the
/// trace is not positive. Each candidate starts from the original matrix.
fn regularize_in_place(cov: &mut [f64], d: usize, state: usize) -> Result<()> {
    if gaussian::cholesky_lower(cov, d).is_some() {
        return Ok(());
    }
    let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let scale = if trace > 0.0 { trace / d as f64 } else { 1.0 };
    let mut eps = RIDGE_START;
    loop {
        let mut candidate = cov.to_vec();
        for i in 0..d {
            candidate[i * d + i] += eps * scale;
        }
        if gaussian::cholesky_lower(&candidate, d).is_some() {
            cov.copy_from_slice(&candidate);
            return Ok(());
        }
        if eps >= RIDGE_MAX {
            return Err(Error::DegenerateCovariance {
                state,
                max_epsilon: RIDGE_MAX,
            });
        }
        eps *= 10.0;
    }
}

/// Fits a complete model from labeled sequences.
///
/// Convenience wrapper running [`fit_initial`], [`fit_transitions`], and
/// [`fit_emissions`], then assembling a validated [`HmmModel`].
pub fn fit(
    obs_seqs: &[ObservationSequence],
    label_seqs: &[LabelSequence],
    k: usize,
    options: &FitOptions,
) -> Result<HmmModel> {
    if obs_seqs.len() != label_seqs.len() {
        return Err(Error::LengthMismatch {
            left: obs_seqs.len(),
            right: label_seqs.len(),
        });
    }
    let initial = fit_initial(label_seqs, k)?;
    let transition = fit_transitions(label_seqs, k)?;
    let (means, covariances) = fit_emissions(obs_seqs, label_seqs, k, options.covariance)?;
    HmmModel::new(initial, transition, means, covariances)
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "number of states must be at least 1".into(),
        ));
    }
    Ok(())
}
