//! Rational rotation algebras through clock and shift matrices, and the
//! crossed product by the dual rotation `α(u) = e^{−2πiθ}u`, `α(v) = v`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupKind, GroupSpec, LengthFunction};
use crate::operator::{
    c64, commutator, dense_norm, m_ell, max_abs_diff, realize, restrict_columns, ActionSpec, CMatrix, CrossedElement,
    TruncatedHilbert,
};

/// `θ = p/q` in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Angle {
    pub p: i64,
    pub q: usize,
}

impl Angle {
    pub fn new(p: i64, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::Precondition("denominator must be positive".into()));
        }
        Ok(Angle { p, q })
    }

    pub fn omega(&self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.p as f64 / self.q as f64)
    }

    pub fn theta(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// `U = diag(ω^j)`.
pub fn clock(angle: Angle) -> CMatrix {
    let q = angle.q;
    let mut m = CMatrix::zeros(q, q);
    for j in 0..q {
        let e = (angle.p * j as i64).rem_euclid(q as i64) as f64;
        m[(j, j)] = Complex64::from_polar(1.0, 2.0 * PI * e / q as f64);
    }
    m
}

/// `V e_j = e_{j+1}`.
pub fn shift(q: usize) -> CMatrix {
    let mut m = CMatrix::zeros(q, q);
    for j in 0..q {
        m[((j + 1) % q, j)] = c64(1.0);
    }
    m
}

/// `max |UV − ω VU|`.
pub fn commutation_residual(angle: Angle) -> f64 {
    let (u, v) = (clock(angle), shift(angle.q));
    max_abs_diff(&(&u * &v), &(&v * &u * angle.omega()))
}

/// `max |U V U* V* − ω I|`.
pub fn group_commutator_residual(angle: Angle) -> f64 {
    let (u, v) = (clock(angle), shift(angle.q));
    let c = &u * &v * u.adjoint() * v.adjoint();
    max_abs_diff(&c, &(CMatrix::identity(angle.q, angle.q) * angle.omega()))
}

/// The rotation action of `Z` on `M_q(C)`, implemented by the shift.
pub fn rotation_action(angle: Angle) -> ActionSpec {
    ActionSpec::new(GroupKind::FreeAbelian { rank: 1 }, vec![shift(angle.q)])
        .expect("the shift is unitary and Z has no relators")
}

/// `α^n(x)`: the rotation applied to each coefficient.
pub fn rotate(x: &CrossedElement, action: &ActionSpec, n: i64) -> Result<CrossedElement> {
    let g = crate::group::GroupElement::Lattice(vec![n]);
    CrossedElement::from_terms(
        x.d(),
        x.terms().iter().map(|(h, a)| Ok((h.clone(), action.act(&g, a)?))).collect::<Result<Vec<_>>>()?,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquicontinuitySweep {
    pub radius: f64,
    /// `Σ_g ‖a_g‖ ‖[M_ℓ, λ_g]‖`.
    pub bound: f64,
    /// `(n, ‖[M_ℓ, α^n(x)]‖)` on the exactness window.
    pub values: Vec<(i64, f64)>,
    pub min_slack: f64,
}

/// Sweep `n` and compare `‖[1 ⊗ M_ℓ, α^n(x)]‖` with the uniform bound.
pub fn equicontinuity_sweep(
    angle: Angle,
    x: &CrossedElement,
    ns: impl IntoIterator<Item = i64>,
    radius: f64,
    tol: f64,
) -> Result<EquicontinuitySweep> {
    use rayon::prelude::*;
    let spec = LengthFunction::word(GroupSpec::standard(GroupKind::FreeAbelian { rank: 1 }));
    let h = TruncatedHilbert::new(&spec, angle.q, radius)?;
    let action = rotation_action(angle);
    let m = m_ell(&h).matrix;
    // ‖[M_ℓ, λ_g]‖ = sup_h |ℓ(gh) − ℓ(h)| = ℓ(g) for word lengths
    let bound: f64 = x
        .terms()
        .iter()
        .map(|(g, a)| Ok(a.clone().svd(false, false).singular_values.max() * spec.length(g)?))
        .sum::<Result<f64>>()?;
    let ns: Vec<i64> = ns.into_iter().collect();
    let values: Vec<(i64, f64)> = ns
        .par_iter()
        .map(|&n| {
            let xn = rotate(x, &action, n)?;
            let t = realize(&xn, &h, &action)?;
            let keep = h.window(t.window.unwrap_or(0.0));
            let c = restrict_columns(&commutator(&m, &t.matrix), &h, keep, 1);
            Ok((n, dense_norm(&c, tol)?))
        })
        .collect::<Result<_>>()?;
    let min_slack = values.iter().map(|(_, v)| bound - v).fold(f64::INFINITY, f64::min);
    Ok(EquicontinuitySweep { radius, bound, values, min_slack })
}
