use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 200_000;
const RESTART_SEED: u64 = 0x5eed_0f1a;

/// Largest eigenvalue of `T*T` by power iteration from `v`.
fn power_iterate(t: &CMatrix, mut v: DVector<Complex64>, tol: f64) -> Result<(f64, DVector<Complex64>)> {
    let n = v.len();
    let norm = v.norm();
    if norm == 0.0 {
        return Ok((0.0, v));
    }
    v /= Complex64::new(norm, 0.0);
    let tt = t.adjoint();
    let mut w = DVector::zeros(t.nrows());
    let mut u = DVector::zeros(n);
    let mut mu_prev = 0.0f64;
    let mut delta_prev = f64::INFINITY;
    for k in 0..MAX_ITERATIONS {
        w.gemv(Complex64::new(1.0, 0.0), t, &v, Complex64::new(0.0, 0.0));
        let mu = w.norm_squared();
        if mu == 0.0 {
            return Ok((0.0, v));
        }
        u.gemv(Complex64::new(1.0, 0.0), &tt, &w, Complex64::new(0.0, 0.0));
        let un = u.norm();
        v.copy_from(&u);
        v /= Complex64::new(un, 0.0);
        let delta = (mu - mu_prev).max(0.0);
        if k > 2 {
            if delta <= 4.0 * f64::EPSILON * mu {
                return Ok((mu, v));
            }
            let q = delta / delta_prev;
            if q < 1.0 && delta * q / (1.0 - q) <= tol * mu {
                return Ok((mu, v));
            }
        }
        mu_prev = mu;
        delta_prev = delta;
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual: delta_prev / mu_prev.max(f64::MIN_POSITIVE) })
}

/// Largest singular value of `t` to relative tolerance `tol`.
///
/// Deterministic: one run from the normalised all-ones vector and one from a
/// fixed-seed random vector; the larger estimate wins. Both are lower bounds.
pub fn op_norm(t: &CMatrix, tol: f64) -> Result<f64> {
    Ok(top_singular(t, tol)?.0)
}

/// Matrices up to this size are normed by a full SVD in [`dense_norm`].
pub const SVD_DIM: usize = 1200;

/// Largest singular value: a dense SVD for small matrices, where clustered
/// top singular values would stall power iteration, and [`op_norm`] above
/// [`SVD_DIM`].
pub fn dense_norm(t: &CMatrix, tol: f64) -> Result<f64> {
    if t.nrows().max(t.ncols()) <= SVD_DIM {
        if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Precondition("matrix has non-finite entries".into()));
        }
        if t.is_empty() {
            return Ok(0.0);
        }
        Ok(t.clone().svd(false, false).singular_values.max())
    } else {
        op_norm(t, tol)
    }
}

/// Largest singular value with a right singular vector (unit length).
pub fn top_singular(t: &CMatrix, tol: f64) -> Result<(f64, DVector<Complex64>)> {
    let n = t.ncols();
    if n == 0 || t.nrows() == 0 {
        return Ok((0.0, DVector::zeros(n)));
    }
    if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Precondition("matrix has non-finite entries".into()));
    }
    let ones = DVector::from_element(n, Complex64::new(1.0, 0.0));
    let a = power_iterate(t, ones, tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED ^ n as u64);
    let rand_v = DVector::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let b = power_iterate(t, rand_v, tol)?;
    let (mu, v) = if b.0 > a.0 { b } else { a };
    Ok((mu.sqrt(), v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn diagonal() {
        let t = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(2.0), c(3.0)]));
        assert!((op_norm(&t, 1e-12).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn zero_and_empty() {
        assert_eq!(op_norm(&DMatrix::zeros(3, 3), 1e-10).unwrap(), 0.0);
        assert_eq!(op_norm(&DMatrix::zeros(0, 0), 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn start_vector_orthogonal_to_top() {
        // all-ones is orthogonal to the top singular vector here
        let t = DMatrix::from_row_slice(2, 2, &[c(1.0), c(-1.0), c(-1.0), c(1.0)]);
        assert!((op_norm(&t, 1e-12).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn agrees_with_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 4, 9, 17] {
            let t =
                DMatrix::from_fn(n, n + 2, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let svd = t.clone().svd(false, false).singular_values.max();
            let got = op_norm(&t, 1e-12).unwrap();
            assert!((got - svd).abs() <= 1e-9 * svd, "{got} vs {svd}");
        }
    }
}
