//! Finite-depth spectral triple on an odometer: the nested coset algebras
//! `C(Z/N_i)` acting on `ℓ²(Z/N_k)` under the uniform state, with
//! `D = Σ λ_i Q_i` built from the successive differences of the averaging
//! projections.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{c64, commutator, max_abs_diff, op_norm, CMatrix};

#[derive(Clone, Debug)]
pub struct OdometerTriple {
    /// `N_0 = 1, N_i = n_1⋯n_i`.
    pub levels: Vec<usize>,
    /// `Q_0, …, Q_k`.
    pub projections: Vec<CMatrix>,
    /// `λ_0 = 0, λ_1, …, λ_k`.
    pub eigenvalues: Vec<f64>,
    pub dirac: CMatrix,
}

/// Dense dimension cap for the top level.
pub const MAX_LEVEL_SIZE: usize = 4096;

/// Projection onto functions on `Z/N_k` that are constant on classes mod `m`.
fn averaging_projection(n: usize, m: usize) -> CMatrix {
    let fibre = (n / m) as f64;
    CMatrix::from_fn(n, n, |i, j| if i % m == j % m { c64(1.0 / fibre) } else { c64(0.0) })
}

impl OdometerTriple {
    /// `orders = [n_1, …, n_k]`, `eigenvalues = [λ_1, …, λ_k]`; the constants
    /// (`Q_0`) sit in the kernel of `D`.
    pub fn new(orders: &[usize], eigenvalues: &[f64]) -> Result<Self> {
        if orders.iter().any(|&n| n < 2) {
            return Err(Error::Precondition("odometer orders must be at least 2".into()));
        }
        if eigenvalues.len() != orders.len() {
            return Err(Error::Precondition(format!("need {} eigenvalues, got {}", orders.len(), eigenvalues.len())));
        }
        let mut levels = vec![1usize];
        for &n in orders {
            let next = levels.last().unwrap() * n;
            if next > MAX_LEVEL_SIZE {
                return Err(Error::DimensionCap { dim: next, cap: MAX_LEVEL_SIZE });
            }
            levels.push(next);
        }
        let top = *levels.last().unwrap();
        let p: Vec<CMatrix> = levels.iter().map(|&m| averaging_projection(top, m)).collect();
        let mut projections = vec![p[0].clone()];
        for i in 1..p.len() {
            projections.push(&p[i] - &p[i - 1]);
        }
        let mut all = vec![0.0];
        all.extend_from_slice(eigenvalues);
        let mut dirac = CMatrix::zeros(top, top);
        for (q, &l) in projections.iter().zip(&all) {
            dirac += q * c64(l);
        }
        Ok(OdometerTriple { levels, projections, eigenvalues: all, dirac })
    }

    pub fn dim(&self) -> usize {
        *self.levels.last().unwrap()
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// `π(f)` for `f` on `Z/N_i`, pulled back to `Z/N_k`.
    pub fn multiplication(&self, level: usize, f: &[f64]) -> Result<CMatrix> {
        let m = self.levels[level];
        if f.len() != m {
            return Err(Error::Precondition(format!("function on Z/{m} needs {m} values")));
        }
        let n = self.dim();
        Ok(CMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |x, _| c64(f[x % m]))))
    }

    pub fn random_function<R: Rng>(&self, level: usize, rng: &mut R) -> Vec<f64> {
        (0..self.levels[level]).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    pub fn rank(&self, i: usize) -> usize {
        self.projections[i].trace().re.round() as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AfReport {
    pub ranks: Vec<usize>,
    pub expected_ranks: Vec<usize>,
    pub projection_residual: f64,
    pub orthogonality_residual: f64,
    pub resolution_residual: f64,
    pub commutation_residual: f64,
    /// `‖[D, π(a)]‖` against `Σ_{j ≤ i} 2|λ_j| ‖a‖` for the sampled `a ∈ A_i`.
    pub lipschitz_slack: f64,
}

/// All structural checks with `samples` random functions per level.
pub fn check<R: Rng>(t: &OdometerTriple, samples: usize, rng: &mut R) -> Result<AfReport> {
    let k = t.depth();
    let n = t.dim();
    let ranks: Vec<usize> = (0..=k).map(|i| t.rank(i)).collect();
    let expected_ranks: Vec<usize> = (0..=k).map(|i| if i == 0 { 1 } else { t.levels[i] - t.levels[i - 1] }).collect();
    let mut projection_residual = 0.0f64;
    let mut orthogonality_residual = 0.0f64;
    let mut sum = CMatrix::zeros(n, n);
    for (i, q) in t.projections.iter().enumerate() {
        projection_residual = projection_residual.max(max_abs_diff(&(q * q), q)).max(max_abs_diff(q, &q.adjoint()));
        for p in &t.projections[i + 1..] {
            orthogonality_residual = orthogonality_residual.max(max_abs_diff(&(q * p), &CMatrix::zeros(n, n)));
        }
        sum += q;
    }
    let resolution_residual = max_abs_diff(&sum, &CMatrix::identity(n, n));
    let mut commutation_residual = 0.0f64;
    let mut lipschitz_slack = f64::INFINITY;
    for i in 0..=k {
        for _ in 0..samples {
            let f = t.random_function(i, rng);
            let a = t.multiplication(i, &f)?;
            for q in &t.projections[i + 1..] {
                commutation_residual =
                    commutation_residual.max(max_abs_diff(&commutator(q, &a), &CMatrix::zeros(n, n)));
            }
            let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let bound: f64 = t.eigenvalues[..=i].iter().map(|l| 2.0 * l.abs() * sup).sum();
            let seminorm = op_norm(&commutator(&t.dirac, &a), 1e-10)?;
            lipschitz_slack = lipschitz_slack.min(bound - seminorm);
        }
    }
    Ok(AfReport {
        ranks,
        expected_ranks,
        projection_residual,
        orthogonality_residual,
        resolution_residual,
        commutation_residual,
        lipschitz_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn binary_odometer_depth_five() {
        let t = OdometerTriple::new(&[2; 5], &[1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
        assert_eq!(t.dim(), 32);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let r = check(&t, 3, &mut rng).unwrap();
        assert_eq!(r.ranks, vec![1, 1, 2, 4, 8, 16]);
        assert_eq!(r.ranks, r.expected_ranks);
        assert!(r.orthogonality_residual < 1e-12);
        assert!(r.commutation_residual < 1e-12);
        assert!(r.resolution_residual < 1e-12);
        assert!(r.lipschitz_slack >= -1e-9);
    }

    #[test]
    fn q0_projects_onto_constants() {
        let t = OdometerTriple::new(&[3, 2], &[1.0, 1.0]).unwrap();
        assert_eq!(t.rank(0), 1);
        let ones = CMatrix::from_element(6, 1, c64(1.0));
        assert!(max_abs_diff(&(&t.projections[0] * &ones), &ones) < 1e-15);
    }

    #[test]
    fn bad_inputs() {
        assert!(OdometerTriple::new(&[1, 2], &[1.0, 2.0]).is_err());
        assert!(OdometerTriple::new(&[2, 2], &[1.0]).is_err());
    }
}
