//! Monge–Kantorovich distances `sup{|ψ(a) − ψ′(a)| : ‖[D, a]‖ ≤ 1}` for exact
//! finite-dimensional triples.
//!
//! Hermitian elements are written `a = t_0·1 + Σ t_k H_k` in a real basis
//! `H_k` of the hermitian part modulo constants. The constant term changes
//! neither the objective nor the seminorm, so the problem is to maximise the
//! linear form `c·t` on the unit ball of the seminorm `L(t) = ‖Σ t_k C_k‖`,
//! `C_k = [D, H_k]`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::af::OdometerTriple;
use crate::error::{Error, Result};
use crate::operator::{c64, commutator, hermitian_defect, top_singular, CMatrix};

pub const BRUTE_FORCE_MAX_DIM: usize = 6;

/// An exact finite spectral triple together with a real basis of the
/// hermitian elements modulo constants.
#[derive(Clone, Debug)]
pub struct FiniteTriple {
    pub dirac: CMatrix,
    pub basis: Vec<CMatrix>,
    commutators: Vec<CMatrix>,
    /// Group order for cyclic triples (enables characters).
    cyclic_order: Option<usize>,
}

fn left_regular(n: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for x in 0..n {
        m[((x + k) % n, x)] = c64(1.0);
    }
    m
}

impl FiniteTriple {
    pub fn new(dirac: CMatrix, basis: Vec<CMatrix>) -> Result<Self> {
        let defect = hermitian_defect(&dirac);
        if defect > 1e-12 {
            return Err(Error::NotHermitian(defect));
        }
        let commutators: Vec<CMatrix> = basis.iter().map(|h| commutator(&dirac, h)).collect();
        // Gram matrix of the commutators in the real inner product Re tr(A*B).
        let p = commutators.len();
        let gram = DMatrix::from_fn(p, p, |i, j| {
            commutators[i].iter().zip(commutators[j].iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
        });
        let scale = gram.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let kernel = gram.symmetric_eigenvalues().iter().filter(|&&e| e.abs() <= 1e-12 * scale).count();
        if kernel > 0 || p == 0 {
            return Err(Error::DegenerateTriple(kernel.max(usize::from(p == 0))));
        }
        Ok(FiniteTriple { dirac, basis, commutators, cyclic_order: None })
    }

    /// `C*(Z_n)` on `ℓ²(Z_n)` with `D = M_ℓ`; `lengths[k] = ℓ(k)`.
    pub fn cyclic(lengths: &[f64]) -> Result<Self> {
        let n = lengths.len();
        if n < 2 {
            return Err(Error::Precondition("cyclic triple needs order at least 2".into()));
        }
        let dirac = CMatrix::from_diagonal(&DVector::from_iterator(n, lengths.iter().map(|&l| c64(l))));
        let mut basis = Vec::new();
        for k in 1..=n / 2 {
            let l = left_regular(n, k);
            if 2 * k == n {
                basis.push(l);
            } else {
                basis.push(&l + l.adjoint());
                basis.push((&l - l.adjoint()) * Complex64::new(0.0, 1.0));
            }
        }
        let mut t = FiniteTriple::new(dirac, basis)?;
        t.cyclic_order = Some(n);
        Ok(t)
    }

    /// Word length `min(k, n − k)` on `Z_n`.
    pub fn cyclic_word(n: usize) -> Result<Self> {
        FiniteTriple::cyclic(&(0..n).map(|k| k.min(n - k) as f64).collect::<Vec<_>>())
    }

    /// The top level `C(Z/N_k)` of an odometer triple, with the indicator
    /// functions of the non-zero points as basis modulo constants.
    pub fn af_level(t: &OdometerTriple) -> Result<Self> {
        let n = t.dim();
        let basis = (1..n)
            .map(|x| {
                let mut m = CMatrix::zeros(n, n);
                m[(x, x)] = c64(1.0);
                m
            })
            .collect();
        FiniteTriple::new(t.dirac.clone(), basis)
    }

    /// The same triple with `D` replaced by `s·D`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let mut t = FiniteTriple::new(&self.dirac * c64(s), self.basis.clone())?;
        t.cyclic_order = self.cyclic_order;
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dirac.nrows()
    }

    pub fn parameter_dim(&self) -> usize {
        self.basis.len()
    }

    fn combine(&self, t: &[f64]) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for (c, &x) in self.commutators.iter().zip(t) {
            m += c * c64(x);
        }
        m
    }

    /// `L(t)` by power iteration, with the gradient `Re⟨u, C_k v⟩`.
    fn seminorm_with_gradient(&self, t: &[f64]) -> Result<(f64, Vec<f64>)> {
        let m = self.combine(t);
        let (s, v) = top_singular(&m, 1e-14)?;
        if s == 0.0 {
            return Ok((0.0, vec![0.0; t.len()]));
        }
        let u = &m * &v / c64(s);
        let grad = self.commutators.iter().map(|c| u.dotc(&(c * &v)).re).collect();
        Ok((s, grad))
    }

    /// `L(t)` through a full SVD.
    pub fn seminorm_svd(&self, t: &[f64]) -> f64 {
        self.combine(t).svd(false, false).singular_values.max()
    }

    pub fn element(&self, t: &[f64]) -> CMatrix {
        let n = self.dim();
        let mut a = CMatrix::zeros(n, n);
        for (h, &x) in self.basis.iter().zip(t) {
            a += h * c64(x);
        }
        a
    }
}

/// A state on the matrix algebra.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum StateSpec {
    /// `λ_k ↦ e^{2πijk/n}` on `C*(Z_n)`.
    Character(usize),
    VectorState(Vec<[f64; 2]>),
    DensityMatrix(Vec<Vec<[f64; 2]>>),
}

impl StateSpec {
    /// Density matrix of the state; normalisation and positivity checked.
    pub fn density(&self, triple: &FiniteTriple) -> Result<CMatrix> {
        let n = triple.dim();
        let rho = match self {
            StateSpec::Character(j) => {
                let order =
                    triple.cyclic_order.ok_or_else(|| Error::Precondition("characters need a cyclic triple".into()))?;
                let xi = DVector::from_fn(order, |x, _| {
                    Complex64::from_polar(1.0 / (order as f64).sqrt(), -2.0 * PI * (j * x) as f64 / order as f64)
                });
                &xi * xi.adjoint()
            }
            StateSpec::VectorState(v) => {
                if v.len() != n {
                    return Err(Error::Precondition(format!("vector state needs {n} entries")));
                }
                let xi = DVector::from_iterator(n, v.iter().map(|z| Complex64::new(z[0], z[1])));
                let norm = xi.norm();
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(Error::Precondition(format!("vector state has norm {norm}")));
                }
                &xi * xi.adjoint()
            }
            StateSpec::DensityMatrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Precondition(format!("density matrix must be {n}×{n}")));
                }
                let rho = CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
                let defect = hermitian_defect(&rho);
                if defect > 1e-12 {
                    return Err(Error::NotHermitian(defect));
                }
                let min = rho.clone().symmetric_eigenvalues().min();
                if min < -1e-12 {
                    return Err(Error::Precondition(format!("density matrix not positive: eigenvalue {min}")));
                }
                rho
            }
        };
        let tr = rho.trace();
        if (tr - c64(1.0)).norm() > 1e-12 {
            return Err(Error::Precondition(format!("state has trace {tr}")));
        }
        Ok(rho)
    }
}

/// `c_k = (ψ − ψ′)(H_k)`.
fn objective(triple: &FiniteTriple, psi: &StateSpec, psi2: &StateSpec) -> Result<Vec<f64>> {
    let diff = psi.density(triple)? - psi2.density(triple)?;
    Ok(triple.basis.iter().map(|h| (&diff * h).trace().re).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MkOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub step: f64,
    pub seed: u64,
}

impl Default for MkOptions {
    fn default() -> Self {
        MkOptions { restarts: 32, iterations: 2000, step: 0.1, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MkResult {
    /// Certified lower bound `|ψ(a) − ψ′(a)|` for the witness.
    pub lower_bound: f64,
    pub converged: bool,
    /// Coordinates of the witness in the hermitian basis.
    pub witness: Vec<f64>,
    pub witness_seminorm: f64,
    pub restarts: usize,
}

/// Normalised point, objective value and gradient of the seminorm.
type Normalised = (Vec<f64>, f64, Vec<f64>);

fn ascend(triple: &FiniteTriple, c: &[f64], start: Vec<f64>, opts: &MkOptions) -> Result<(f64, Vec<f64>)> {
    let normalise = |t: Vec<f64>| -> Result<Option<Normalised>> {
        let (l, grad) = triple.seminorm_with_gradient(&t)?;
        if l <= 0.0 || !l.is_finite() {
            return Ok(None);
        }
        let t: Vec<f64> = t.iter().map(|x| x / l).collect();
        let value: f64 = c.iter().zip(&t).map(|(a, b)| a * b).sum();
        Ok(Some((t, value, grad)))
    };
    let Some((mut t, mut value, mut grad)) = normalise(start)? else {
        return Ok((0.0, vec![0.0; c.len()]));
    };
    let mut step = opts.step;
    for _ in 0..opts.iterations {
        // gradient of c·t / L(t) at L(t) = 1
        let dir: Vec<f64> = c.iter().zip(&grad).map(|(ci, gi)| ci - value * gi).collect();
        let cand: Vec<f64> = t.iter().zip(&dir).map(|(x, d)| x + step * d).collect();
        match normalise(cand)? {
            Some((nt, nv, ng)) if nv > value => {
                t = nt;
                value = nv;
                grad = ng;
            }
            _ => {
                step *= 0.5;
                if step < 1e-14 {
                    break;
                }
            }
        }
    }
    Ok((value, t))
}

/// Lower bound for the distance between two states by normalised ascent with
/// random restarts.
pub fn mk_distance(triple: &FiniteTriple, psi: &StateSpec, psi2: &StateSpec, opts: &MkOptions) -> Result<MkResult> {
    let c = objective(triple, psi, psi2)?;
    let p = c.len();
    if c.iter().all(|x| x.abs() < 1e-15) {
        return Ok(MkResult {
            lower_bound: 0.0,
            converged: true,
            witness: vec![0.0; p],
            witness_seminorm: 0.0,
            restarts: 0,
        });
    }
    let restarts = opts.restarts.max(1);
    let results: Vec<(f64, Vec<f64>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r as u64));
            let start: Vec<f64> = if r == 0 { c.clone() } else { (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect() };
            ascend(triple, &c, start, opts)
        })
        .collect::<Result<_>>()?;
    let (best, witness) = results.iter().cloned().max_by(|a, b| a.0.total_cmp(&b.0)).expect("at least one restart");
    let agreeing = results.iter().filter(|(v, _)| (best - v).abs() <= 1e-7 * best.max(1.0)).count();
    let witness_seminorm = triple.seminorm_svd(&witness);
    // Rescale into the unit ball exactly if power iteration fell short.
    let (lower_bound, witness) = if witness_seminorm > 1.0 {
        (best / witness_seminorm, witness.iter().map(|x| x / witness_seminorm).collect())
    } else {
        (best, witness)
    };
    Ok(MkResult {
        lower_bound,
        converged: agreeing >= 2.min(restarts),
        witness_seminorm: witness_seminorm.min(1.0),
        witness,
        restarts,
    })
}

/// Grid search over the boundary of the cube `[−1, 1]^p` followed by a
/// pattern-search polish; the ratio `c·t / L(t)` is scale invariant.
pub fn mk_brute_force(triple: &FiniteTriple, psi: &StateSpec, psi2: &StateSpec, grid: usize) -> Result<f64> {
    let p = triple.parameter_dim();
    if p > BRUTE_FORCE_MAX_DIM {
        return Err(Error::BruteForceDimension { dim: p, max: BRUTE_FORCE_MAX_DIM });
    }
    let c = objective(triple, psi, psi2)?;
    let ratio = |t: &[f64]| -> f64 {
        let l = triple.seminorm_svd(t);
        if l <= 0.0 {
            return f64::NEG_INFINITY;
        }
        c.iter().zip(t).map(|(a, b)| a * b).sum::<f64>() / l
    };
    let g = grid.max(2);
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / (g - 1) as f64;
    let mut best = (f64::NEG_INFINITY, vec![0.0; p]);
    let total = g.pow(p as u32);
    for idx in 0..total {
        let mut t = Vec::with_capacity(p);
        let mut r = idx;
        for _ in 0..p {
            t.push(coord(r % g));
            r /= g;
        }
        if t.iter().all(|x| x.abs() < 1.0 - 1e-12) {
            continue;
        }
        let v = ratio(&t);
        if v > best.0 {
            best = (v, t);
        }
    }
    let (mut value, mut t) = best;
    let mut h = 2.0 / (g - 1) as f64;
    while h > 1e-10 {
        let mut improved = false;
        for i in 0..p {
            for s in [-1.0, 1.0] {
                let mut cand = t.clone();
                cand[i] += s * h;
                let v = ratio(&cand);
                if v > value {
                    value = v;
                    t = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Ok(value.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2(l: f64) -> FiniteTriple {
        FiniteTriple::cyclic(&[0.0, l]).unwrap()
    }

    #[test]
    fn two_point_space() {
        let opts = MkOptions::default();
        let r = mk_distance(&z2(1.0), &StateSpec::Character(0), &StateSpec::Character(1), &opts).unwrap();
        assert!((r.lower_bound - 2.0).abs() < 1e-6, "{}", r.lower_bound);
        assert!(r.converged);
        assert!(r.witness_seminorm <= 1.0 + 1e-9);
        let h = mk_distance(&z2(2.0), &StateSpec::Character(0), &StateSpec::Character(1), &opts).unwrap();
        assert!((h.lower_bound - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equal_states() {
        let r =
            mk_distance(&z2(1.0), &StateSpec::Character(1), &StateSpec::Character(1), &MkOptions::default()).unwrap();
        assert_eq!(r.lower_bound, 0.0);
    }

    #[test]
    fn brute_force_agrees_on_z3() {
        let t = FiniteTriple::cyclic_word(3).unwrap();
        let (a, b) = (StateSpec::Character(0), StateSpec::Character(1));
        let ascent = mk_distance(&t, &a, &b, &MkOptions::default()).unwrap().lower_bound;
        let brute = mk_brute_force(&t, &a, &b, 41).unwrap();
        assert!((ascent - brute).abs() < 1e-4, "{ascent} vs {brute}");
    }

    #[test]
    fn af_level_distance_between_points() {
        let t = OdometerTriple::new(&[2], &[1.0]).unwrap();
        let triple = FiniteTriple::af_level(&t).unwrap();
        // D = Q_1 on C², [D, diag(0, 1)] has norm 1/2
        let p0 = StateSpec::VectorState(vec![[1.0, 0.0], [0.0, 0.0]]);
        let p1 = StateSpec::VectorState(vec![[0.0, 0.0], [1.0, 0.0]]);
        let r = mk_distance(&triple, &p0, &p1, &MkOptions::default()).unwrap();
        assert!((r.lower_bound - 2.0).abs() < 1e-6, "{}", r.lower_bound);
    }

    #[test]
    fn degenerate_triple_rejected() {
        // D = 0 kills every commutator
        assert!(matches!(FiniteTriple::cyclic(&[0.0, 0.0]), Err(Error::DegenerateTriple(_))));
    }

    #[test]
    fn constants_do_not_matter() {
        let t = FiniteTriple::cyclic_word(4).unwrap();
        let x = [0.3, -0.2, 0.5];
        let a = t.element(&x);
        let shifted = &a + CMatrix::identity(4, 4) * c64(7.0);
        assert!((commutator(&t.dirac, &a) - commutator(&t.dirac, &shifted)).norm() < 1e-12);
    }
}
