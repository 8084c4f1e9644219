//! Deterministic sampling of state paths and observations from a model.

use crate::hmm::HmmModel;
use crate::sequence::{LabelSequence, ObservationSequence};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

impl HmmModel {
    /// Draws a state path of length `t` and one observation per state.
    ///
    /// The generator is seeded explicitly, so equal `(model, t, seed)`
    /// triples produce identical output on every platform. Observations are
    /// sampled as `mu + L z` with `z` standard normal and `L` the
    /// covariance's Cholesky factor. `t = 0` yields empty sequences. Both
    /// outputs are stamped at 1 frame per second, the rate the model is
    /// meant to consume.
    pub fn sample(&self, t: usize, seed: u64) -> (LabelSequence, ObservationSequence) {
        let k = self.k();
        let d = self.dims();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut labels = Vec::with_capacity(t);
        let mut data = Vec::with_capacity(t * d);
        let mut z = vec![0.0; d];

        for step in 0..t {
            let state = if step == 0 {
                pick_categorical(self.initial(), &mut rng)
            } else {
                let prev = labels[step - 1];
                pick_categorical(&self.transition()[prev * k..(prev + 1) * k], &mut rng)
            };
            labels.push(state);

            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let mean = &self.means()[state * d..(state + 1) * d];
            let l = &self.chol[state * d * d..(state + 1) * d * d];
            for i in 0..d {
                let mut v = mean[i];
                for j in 0..=i {
                    v += l[i * d + j] * z[j];
                }
                data.push(v);
            }
        }

        let labels = LabelSequence::new(labels, 1.0).expect("fixed fps is valid");
        let obs = ObservationSequence::new(data, d, 1.0)
            .expect("Gaussian draws from finite parameters are finite");
        (labels, obs)
    }
}

/// Samples an index from a probability vector.
///
/// Walks the cumulative sum and returns the first index where it exceeds
/// the uniform draw; roundoff leaving the total fractionally below one is
/// absorbed by falling back to the last positive-probability index.
fn pick_categorical<R: Rng>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        cum += pi;
        if u < cum {
            return i;
        }
    }
    p.iter()
        .rposition(|&pi| pi > 0.0)
        .expect("stochastic vector has a positive entry")
}
