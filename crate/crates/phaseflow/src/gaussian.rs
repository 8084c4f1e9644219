//! Small dense-matrix kernels for multivariate Gaussian log-densities.
//!
//! Matrices are row-major `Vec<f64>` of length `d * d`. The dimensions in
//! play are tiny (the number of phase classes), so a direct Cholesky
//! factorization beats pulling in a linear-algebra dependency and keeps the
//! arithmetic order fixed.

pub(crate) const LN_2PI: f64 = 1.8378770664093453;

/// Cholesky factorization `a = L * L^T` for a symmetric matrix.
///
/// Returns the lower factor `L` (row-major, upper triangle zeroed), or
/// `None` when `a` is not positive definite. Only the lower triangle of `a`
/// is read.
pub(crate) fn cholesky_lower(a: &[f64], d: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), d * d);
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                // NaN pivots must fail too, so avoid `sum <= 0.0` here.
                if sum.is_nan() || sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * d + i] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    Some(l)
}

/// Solves `L * x = b` in place for lower-triangular `L`.
pub(crate) fn forward_solve(l: &[f64], d: usize, b: &mut [f64]) {
    debug_assert_eq!(b.len(), d);
    for i in 0..d {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * d + k] * b[k];
        }
        b[i] = sum / l[i * d + i];
    }
}

/// `log |Sigma|` from its Cholesky factor: `2 * sum_i ln L[i][i]`.
pub(crate) fn log_det_from_cholesky(l: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        s += l[i * d + i].ln();
    }
    2.0 * s
}

/// Log-density of `N(mean, Sigma)` at `y`, given `Sigma`'s Cholesky factor
/// and the precomputed constant `-(d/2) ln 2pi - (1/2) log |Sigma|`.
///
/// `scratch` must have length `d`; it is overwritten.
pub(crate) fn log_density(
    l: &[f64],
    mean: &[f64],
    constant: f64,
    y: &[f64],
    scratch: &mut [f64],
) -> f64 {
    let d = mean.len();
    debug_assert_eq!(y.len(), d);
    debug_assert_eq!(scratch.len(), d);
    for i in 0..d {
        scratch[i] = y[i] - mean[i];
    }
    forward_solve(l, d, scratch);
    let mut quad = 0.0;
    for v in scratch.iter() {
        quad += v * v;
    }
    constant - 0.5 * quad
}

/// Emission constant for one state: `-(d/2) ln 2pi - (1/2) log |Sigma|`.
pub(crate) fn emission_constant(l: &[f64], d: usize) -> f64 {
    -0.5 * (d as f64) * LN_2PI - 0.5 * log_det_from_cholesky(l, d)
}

/// True when `|a[i][j] - a[j][i]| <= tol * (1 + max(|a[i][j]|, |a[j][i]|))`
/// for all pairs.
pub(crate) fn is_symmetric(a: &[f64], d: usize, tol: f64) -> bool {
    for i in 0..d {
        for j in 0..i {
            let x = a[i * d + j];
            let y = a[j * d + i];
            if (x - y).abs() > tol * (1.0 + x.abs().max(y.abs())) {
                return false;
            }
        }
    }
    true
}
