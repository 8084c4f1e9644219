//! Gaussian-emission hidden Markov model: parameters, fitting, decoding,
//! and sampling.
//!
//! A [`HmmModel`] is immutable once built. Construction validates the
//! probabilistic invariants (stochastic vectors, symmetric positive-definite
//! covariances) and caches the quantities every decode needs: log
//! parameters, per-state Cholesky factors, and emission constants.

mod decode;
mod fit;
mod sample;

pub use decode::{DecodeResult, OnlineDecoder};
pub use fit::{fit, fit_emissions, fit_initial, fit_transitions, CovarianceKind, FitOptions};

use crate::error::{Error, Result};
use crate::gaussian;
use crate::sequence::ObservationSequence;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Tolerance for "sums to one" and symmetry checks at construction.
const PROB_TOL: f64 = 1e-9;

/// A `K`-state HMM with one multivariate Gaussian emission per state.
///
/// Probability parameters are stored as given; log-space copies and
/// covariance factorizations are cached at construction. Zero probabilities
/// are legal and map to `-inf` log entries, which the decoders treat as
/// forbidden transitions.
#[derive(Debug, Clone)]
pub struct HmmModel {
    k: usize,
    d: usize,
    initial: Vec<f64>,
    transition: Vec<f64>,
    means: Vec<f64>,
    covariances: Vec<f64>,
    log_initial: Vec<f64>,
    log_transition: Vec<f64>,
    chol: Vec<f64>,
    emission_const: Vec<f64>,
}

impl HmmModel {
    /// Builds and validates a model.
    ///
    /// Shapes: `initial` is `K`, `transition` is `K x K` row-major, `means`
    /// is `K x D` row-major, `covariances` is `K` stacked `D x D` row-major
    /// matrices. Every covariance must be symmetric positive definite.
    pub fn new(
        initial: Vec<f64>,
        transition: Vec<f64>,
        means: Vec<f64>,
        covariances: Vec<f64>,
    ) -> Result<Self> {
        let k = initial.len();
        if k == 0 {
            return Err(Error::InvariantViolation(
                "model needs at least one state".into(),
            ));
        }
        if transition.len() != k * k {
            return Err(Error::InvariantViolation(format!(
                "transition matrix has {} entries, expected {k}x{k}",
                transition.len()
            )));
        }
        if means.is_empty() || !means.len().is_multiple_of(k) {
            return Err(Error::InvariantViolation(format!(
                "means buffer has {} entries, not a positive multiple of K = {k}",
                means.len()
            )));
        }
        let d = means.len() / k;
        if covariances.len() != k * d * d {
            return Err(Error::InvariantViolation(format!(
                "covariance buffer has {} entries, expected {k}x{d}x{d}",
                covariances.len()
            )));
        }
        for (name, buf) in [
            ("initial", &initial),
            ("transition", &transition),
            ("means", &means),
            ("covariances", &covariances),
        ] {
            if let Some(i) = buf.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvariantViolation(format!(
                    "non-finite value in {name} at flat index {i}"
                )));
            }
        }
        check_stochastic("initial distribution", &initial)?;
        for (s, row) in transition.chunks_exact(k).enumerate() {
            check_stochastic(&format!("transition row {s}"), row)?;
        }

        let mut chol = vec![0.0; k * d * d];
        let mut emission_const = vec![0.0; k];
        for s in 0..k {
            let cov = &covariances[s * d * d..(s + 1) * d * d];
            if !gaussian::is_symmetric(cov, d, PROB_TOL) {
                return Err(Error::InvariantViolation(format!(
                    "covariance of state {s} is not symmetric"
                )));
            }
            let l = gaussian::cholesky_lower(cov, d).ok_or_else(|| {
                Error::InvariantViolation(format!(
                    "covariance of state {s} is not positive definite"
                ))
            })?;
            chol[s * d * d..(s + 1) * d * d].copy_from_slice(&l);
            emission_const[s] = gaussian::emission_constant(&l, d);
        }

        let log_initial = initial.iter().map(|p| p.ln()).collect();
        let log_transition = transition.iter().map(|p| p.ln()).collect();

        Ok(Self {
            k,
            d,
            initial,
            transition,
            means,
            covariances,
            log_initial,
            log_transition,
            chol,
            emission_const,
        })
    }

    /// Number of hidden states `K`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Observation dimension `D`.
    pub fn dims(&self) -> usize {
        self.d
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Row-major `K x K` transition matrix; `transition()[i * k + j]` is
    /// `P(j | i)`.
    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    /// Row-major `K x D` emission means.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// `K` stacked row-major `D x D` covariance matrices.
    pub fn covariances(&self) -> &[f64] {
        &self.covariances
    }

    pub(crate) fn log_initial(&self) -> &[f64] {
        &self.log_initial
    }

    pub(crate) fn log_transition(&self) -> &[f64] {
        &self.log_transition
    }

    /// Gaussian log-density of observation `y` under state `state`.
    ///
    /// # Panics
    ///
    /// Panics if `state >= k()` or `y.len() != dims()`.
    pub fn log_emission(&self, state: usize, y: &[f64]) -> f64 {
        assert!(state < self.k, "state {state} out of range for K = {}", self.k);
        assert_eq!(y.len(), self.d, "observation width");
        let mut scratch = vec![0.0; self.d];
        self.log_emission_into(state, y, &mut scratch)
    }

    fn log_emission_into(&self, state: usize, y: &[f64], scratch: &mut [f64]) -> f64 {
        let d = self.d;
        gaussian::log_density(
            &self.chol[state * d * d..(state + 1) * d * d],
            &self.means[state * d..(state + 1) * d],
            self.emission_const[state],
            y,
            scratch,
        )
    }

    /// `T x K` row-major matrix of log emission densities for a sequence.
    ///
    /// With the `parallel` feature the rows are computed across threads;
    /// every entry is computed independently, so the result is identical to
    /// [`log_emission_matrix_seq`].
    pub fn log_emission_matrix(&self, obs: &ObservationSequence) -> Result<Vec<f64>> {
        self.check_dims(obs)?;
        #[cfg(feature = "parallel")]
        {
            let k = self.k;
            let mut out = vec![0.0; obs.len() * k];
            out.par_chunks_exact_mut(k)
                .enumerate()
                .for_each_init(
                    || vec![0.0; self.d],
                    |scratch, (t, row)| {
                        let y = obs.row(t);
                        for (s, cell) in row.iter_mut().enumerate() {
                            *cell = self.log_emission_into(s, y, scratch);
                        }
                    },
                );
            Ok(out)
        }
        #[cfg(not(feature = "parallel"))]
        {
            self.log_emission_matrix_seq(obs)
        }
    }

    /// Single-threaded version of [`log_emission_matrix`]; always compiled.
    ///
    /// [`log_emission_matrix`]: Self::log_emission_matrix
    pub fn log_emission_matrix_seq(&self, obs: &ObservationSequence) -> Result<Vec<f64>> {
        self.check_dims(obs)?;
        let k = self.k;
        let mut out = vec![0.0; obs.len() * k];
        let mut scratch = vec![0.0; self.d];
        for (t, row) in out.chunks_exact_mut(k).enumerate() {
            let y = obs.row(t);
            for (s, cell) in row.iter_mut().enumerate() {
                *cell = self.log_emission_into(s, y, &mut scratch);
            }
        }
        Ok(out)
    }

    fn check_dims(&self, obs: &ObservationSequence) -> Result<()> {
        if obs.dims() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: obs.dims(),
            });
        }
        Ok(())
    }
}

fn check_stochastic(what: &str, p: &[f64]) -> Result<()> {
    if let Some(i) = p.iter().position(|&v| v < 0.0) {
        return Err(Error::InvariantViolation(format!(
            "{what}: negative probability at index {i}"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InvariantViolation(format!(
            "{what}: probabilities sum to {sum}, expected 1"
        )));
    }
    Ok(())
}
