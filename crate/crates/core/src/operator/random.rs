//! Seeded random coefficients for checks and tests.

use num_complex::Complex64;
use rand::Rng;

use super::CMatrix;

pub fn complex<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

pub fn hermitian<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let m = matrix(rng, d, d);
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Unitary from the QR factor of a random matrix.
pub fn unitary<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    matrix(rng, d, d).qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{hermitian_defect, unitary_defect};
    use rand::SeedableRng;

    #[test]
    fn shapes_and_symmetry() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert!(hermitian_defect(&hermitian(&mut rng, 4)) < 1e-15);
        assert!(unitary_defect(&unitary(&mut rng, 5)) < 1e-12);
    }
}
