//! Asymptotic (stable) semi-norms: Fekete truncations, the exact polytope
//! norm dual to the facet functionals, and the uniform deviation of `φ`.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{BallTable, GroupElement, GroupKind, LengthFunction};
use crate::horoboundary::SupportFunctional;
use crate::polytope;

pub const DEFAULT_HORIZON: u64 = 40;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StableNormResult {
    pub g: GroupElement,
    /// `min_{i ≤ I} ℓ(i·g)/i`.
    pub value: f64,
    /// `ℓ(I·g)/I − value`.
    pub fekete_gap: f64,
    pub horizon: u64,
    pub length: f64,
}

fn require_direction(kind: GroupKind, g: &GroupElement) -> Result<()> {
    if kind.is_abelian() || kind.is_central(g) {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{g} is neither in an abelian group nor central; its stable norm is not defined here"
        )))
    }
}

pub fn asymptotic_length(g: &GroupElement, spec: &LengthFunction, horizon: u64) -> Result<StableNormResult> {
    let kind = spec.group().kind;
    require_direction(kind, g)?;
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let mut value = f64::INFINITY;
    let mut last = 0.0;
    for i in 1..=horizon {
        let gi = kind.power(g, i as i64)?;
        last = spec.length(&gi)? / i as f64;
        value = value.min(last);
    }
    Ok(StableNormResult { g: g.clone(), value, fekete_gap: last - value, horizon, length: spec.length(g)? })
}

/// `max_F σ_F(x)`, the polytope norm whose unit ball is `conv(p_G(S))`.
pub fn stable_norm_dual(x: &[BigRational], functionals: &[SupportFunctional]) -> Result<BigRational> {
    if functionals.is_empty() {
        return Err(Error::Precondition("no support functionals given".into()));
    }
    functionals
        .iter()
        .map(|f| {
            if f.coefficients.len() != x.len() {
                return Err(Error::Precondition(format!(
                    "functional of dimension {} applied to a vector of dimension {}",
                    f.coefficients.len(),
                    x.len()
                )));
            }
            Ok(f.coefficients.iter().zip(x).fold(BigRational::zero(), |a, (c, v)| a + c * v))
        })
        .try_fold(None::<BigRational>, |best, v| {
            let v = v?;
            Ok(Some(match best {
                Some(b) if b >= v => b,
                _ => v,
            }))
        })
        .map(|b| b.expect("non-empty"))
}

pub fn stable_norm_dual_int(x: &[i64], functionals: &[SupportFunctional]) -> Result<BigRational> {
    let q: Vec<BigRational> = x.iter().map(|&c| polytope::rational(c)).collect();
    stable_norm_dual(&q, functionals)
}

/// The limit norm used on the asymptotic side of the deviation check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum AsymptoticNorm {
    Polytope(Vec<SupportFunctional>),
    /// The stable norm vanishes identically (sublinear lengths).
    Vanishing,
}

impl AsymptoticNorm {
    pub fn eval(&self, x: &[i64]) -> Result<f64> {
        match self {
            AsymptoticNorm::Polytope(f) => Ok(stable_norm_dual_int(x, f)?.to_f64().unwrap_or(f64::NAN)),
            AsymptoticNorm::Vanishing => Ok(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationReport {
    pub i: u64,
    /// `max_h |φ^ℓ_{ig}(h) − φ^{as}_{ig}(h)| / i` over the ball.
    pub deviation: f64,
    /// `C = max |ℓ − ℓ^{as}|` over the ball and its translate by `−ig`.
    pub constant: f64,
    /// `4C/i`.
    pub envelope: f64,
    pub within_envelope: bool,
    /// Only the finite ball was examined.
    pub ball_only: bool,
}

pub fn uniform_deviation(
    g: &GroupElement,
    i: u64,
    ball: &BallTable,
    spec: &LengthFunction,
    norm: &AsymptoticNorm,
) -> Result<DeviationReport> {
    let kind = spec.group().kind;
    if !kind.is_abelian() {
        return Err(Error::Precondition("uniform deviation needs an abelian group".into()));
    }
    if i == 0 {
        return Err(Error::Precondition("i must be at least 1".into()));
    }
    let ig = kind.power(g, i as i64)?;
    let ig_inv = kind.inverse(&ig)?;
    let mut deviation = 0.0f64;
    let mut constant = 0.0f64;
    for (h, lh) in ball.iter() {
        let y = kind.multiply_unchecked(&ig_inv, h);
        let ly = spec.length(&y)?;
        let nh = norm.eval(&kind.abelianize(h)?)?;
        let ny = norm.eval(&kind.abelianize(&y)?)?;
        constant = constant.max((lh - nh).abs()).max((ly - ny).abs());
        deviation = deviation.max(((lh - ly) - (nh - ny)).abs() / i as f64);
    }
    let envelope = 4.0 * constant / i as f64;
    Ok(DeviationReport {
        i,
        deviation,
        constant,
        envelope,
        within_envelope: deviation <= envelope + 1e-12,
        ball_only: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{GroupSpec, LengthFormula};
    use crate::horoboundary::facets;

    fn lat(v: &[i64]) -> GroupElement {
        GroupElement::Lattice(v.to_vec())
    }

    #[test]
    fn integers() {
        let l = LengthFunction::word(GroupSpec::standard(GroupKind::FreeAbelian { rank: 1 }));
        let r = asymptotic_length(&lat(&[5]), &l, 40).unwrap();
        assert_eq!(r.value, 5.0);
        assert_eq!(r.fekete_gap, 0.0);
    }

    #[test]
    fn hexagonal_antidiagonal() {
        let l = LengthFunction::word(GroupSpec::hexagonal());
        let r = asymptotic_length(&lat(&[1, -1]), &l, 20).unwrap();
        assert_eq!(r.value, 2.0);
    }

    #[test]
    fn dual_norm_values() {
        let d = facets(&GroupSpec::standard(GroupKind::FreeAbelian { rank: 2 })).unwrap();
        assert_eq!(stable_norm_dual_int(&[3, -2], &d).unwrap(), polytope::rational(5));
        let h = facets(&GroupSpec::hexagonal()).unwrap();
        assert_eq!(stable_norm_dual_int(&[2, 1], &h).unwrap(), polytope::rational(2));
        assert!(stable_norm_dual_int(&[0, 0], &h).unwrap().is_zero());
        assert!(stable_norm_dual_int(&[1, 1], &[]).is_err());
    }

    #[test]
    fn non_central_heisenberg_rejected() {
        let l = LengthFunction::word(GroupSpec::standard(GroupKind::Heisenberg3));
        assert!(asymptotic_length(&crate::group::heisenberg::a(), &l, 3).is_err());
    }

    #[test]
    fn integer_deviation_vanishes() {
        let l = LengthFunction::word(GroupSpec::standard(GroupKind::FreeAbelian { rank: 1 }));
        let norm = AsymptoticNorm::Polytope(facets(l.group()).unwrap());
        let ball = l.ball(10.0).unwrap();
        for i in 1..6 {
            let r = uniform_deviation(&lat(&[1]), i, &ball, &l, &norm).unwrap();
            assert_eq!(r.deviation, 0.0);
        }
    }

    #[test]
    fn central_formula_deviation_is_large() {
        let l = LengthFunction::formula(LengthFormula::CentralSqrt);
        let ball = l.ball(12.0).unwrap();
        let r = uniform_deviation(&lat(&[1]), 4, &ball, &l, &AsymptoticNorm::Vanishing).unwrap();
        assert_eq!(r.deviation, 2.0);
    }
}
