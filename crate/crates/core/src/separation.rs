//! Separatedness certificates: boundary functionals spanning the dual of the
//! abelianization, or an analytic sublinearity witness showing they cannot.

use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupKind, LengthFunction, LengthKind, NormSpec};
use crate::horoboundary::{facets, SupportFunctional};
use crate::polytope;

pub const SUBLINEARITY_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_WITNESS_HORIZON: u64 = 10_000;
/// Checkpoints for the extended search are powers of ten up to this exponent.
pub const MAX_HORIZON_EXPONENT: u32 = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WitnessKind {
    FacetSpan,
    SublinearityFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SublinearityReport {
    pub g: GroupElement,
    pub horizon: u64,
    /// `ℓ(g^I)/I` at the requested horizon.
    pub ratio: f64,
    /// Smallest ratio seen over all checkpoints; an upper bound for the
    /// asymptotic length along `⟨g⟩`.
    pub fekete_bound: f64,
    /// `(I, ℓ(g^I)/I)` at the extended checkpoints.
    pub checkpoints: Vec<(u64, f64)>,
    pub decreasing: bool,
    /// The asymptotic length along `⟨g⟩` is below tolerance, so every induced
    /// homomorphism vanishes on `p(g)`.
    pub vanishing: bool,
}

/// Rational matrix rank with the rows and columns of an invertible minor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankCertificate {
    pub rank: usize,
    pub rows: Vec<usize>,
    pub columns: Vec<usize>,
}

pub fn rational_rank(matrix: &[Vec<BigRational>]) -> RankCertificate {
    let (rank, rows) = polytope::rank_with_basis(matrix);
    // Columns of an invertible minor: row-reduce the chosen rows.
    let mut sub: Vec<Vec<BigRational>> = rows.iter().map(|&i| matrix[i].clone()).collect();
    let mut columns = Vec::new();
    let ncols = sub.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..sub.len()).find(|&i| !sub[i][c].is_zero()) else {
            continue;
        };
        sub.swap(r, p);
        let inv = BigRational::one() / sub[r][c].clone();
        let pivot: Vec<BigRational> = sub[r].iter().map(|x| x * &inv).collect();
        for (i, row) in sub.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x -= y * &f;
                }
            }
        }
        sub[r] = pivot;
        columns.push(c);
        r += 1;
        if r == sub.len() {
            break;
        }
    }
    RankCertificate { rank, rows, columns }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationCertificate {
    pub functionals: Vec<SupportFunctional>,
    pub rank: usize,
    pub abelianization_rank: usize,
    pub separated: bool,
    pub witness_kind: WitnessKind,
    /// An invertible `m×m` minor of the functional matrix when separated.
    pub invertible_minor: Option<RankCertificate>,
    pub sublinearity: Option<SublinearityReport>,
}

fn unit_functionals(m: usize) -> Vec<SupportFunctional> {
    let mut out = Vec::new();
    for i in 0..m {
        for s in [1, -1] {
            let mut c = vec![BigRational::zero(); m];
            c[i] = polytope::rational(s);
            out.push(SupportFunctional { coefficients: c, facet: Vec::new() });
        }
    }
    out
}

fn boundary_functionals(l: &LengthFunction) -> Result<Option<Vec<SupportFunctional>>> {
    let m = l.group().abelianization_rank();
    let base = match l.kind() {
        LengthKind::Word => facets(l.group())?,
        LengthKind::Norm(NormSpec::L1) => facets(l.group())?,
        // Smooth and cubical norms: the functionals at the coordinate directions.
        LengthKind::Norm(NormSpec::L2) | LengthKind::Norm(NormSpec::LInf) => unit_functionals(m),
        LengthKind::Norm(NormSpec::Polytope { vertices }) => polytope::facets(vertices, m)?
            .into_iter()
            .map(|f| SupportFunctional { coefficients: f.normal, facet: Vec::new() })
            .collect(),
        LengthKind::Table(_) | LengthKind::Formula(_) => return Ok(None),
    };
    Ok(Some(base.iter().map(|f| f.scaled(l.scale())).collect()))
}

pub fn separation_certificate(l: &LengthFunction) -> Result<SeparationCertificate> {
    let kind = l.group().kind;
    let m = kind.abelianization_rank();
    if !kind.is_abelian() {
        return Err(Error::Precondition(format!(
            "separation certificates are computed for abelian groups, got {kind}"
        )));
    }
    if let Some(functionals) = boundary_functionals(l)? {
        let matrix: Vec<Vec<BigRational>> = functionals.iter().map(|f| f.coefficients.clone()).collect();
        let cert = rational_rank(&matrix);
        let separated = cert.rank == m;
        return Ok(SeparationCertificate {
            rank: cert.rank,
            abelianization_rank: m,
            separated,
            witness_kind: WitnessKind::FacetSpan,
            invertible_minor: separated.then_some(cert),
            functionals,
            sublinearity: None,
        });
    }

    // Analytic lengths: look for sublinear growth along each coordinate.
    for i in 0..m {
        let mut v = vec![0; m];
        v[i] = 1;
        let g = match kind {
            GroupKind::FreeAbelian { .. } => GroupElement::Lattice(v),
            GroupKind::FreeAbelianTimesCyclic { .. } => GroupElement::LatticeTorsion(v, 0),
            _ => unreachable!("abelian kinds with positive rank"),
        };
        let report = sublinearity_witness(l, &g, DEFAULT_WITNESS_HORIZON)?;
        if report.vanishing {
            return Ok(SeparationCertificate {
                functionals: Vec::new(),
                rank: 0,
                abelianization_rank: m,
                separated: false,
                witness_kind: WitnessKind::SublinearityFailure,
                invertible_minor: None,
                sublinearity: Some(report),
            });
        }
    }
    Err(Error::Precondition("no boundary functionals and no sublinearity witness are available for this length".into()))
}

fn ratio(l: &LengthFunction, kind: GroupKind, g: &GroupElement, i: u64) -> Result<f64> {
    let gi = kind.power(g, i as i64)?;
    Ok(l.length(&gi)? / i as f64)
}

/// `ℓ(g^I)/I`, with the extended checkpoints `10^k` used to decide whether the
/// asymptotic length along `⟨g⟩` vanishes.
pub fn sublinearity_witness(l: &LengthFunction, g: &GroupElement, horizon: u64) -> Result<SublinearityReport> {
    let kind = l.group().kind;
    if kind.is_torsion(g) {
        return Err(Error::TorsionElement(g.to_string()));
    }
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let r = ratio(l, kind, g, horizon)?;
    let mut checkpoints = Vec::new();
    let mut fekete_bound = r;
    for k in 0..=MAX_HORIZON_EXPONENT {
        let i = 10u64.pow(k);
        match ratio(l, kind, g, i) {
            Ok(v) => {
                let stalled = checkpoints.last().is_some_and(|&(_, p)| v >= p);
                fekete_bound = fekete_bound.min(v);
                checkpoints.push((i, v));
                // a stalled trend can never certify vanishing
                if stalled || (fekete_bound < SUBLINEARITY_TOLERANCE && i >= horizon) {
                    break;
                }
            }
            // Explicit tables and capped balls end the search.
            Err(Error::LengthUnavailable(_)) | Err(Error::CapExceeded { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    let tail: Vec<f64> = checkpoints.iter().rev().take(3).map(|c| c.1).collect();
    let decreasing = tail.len() >= 2 && tail.windows(2).all(|w| w[0] < w[1]);
    Ok(SublinearityReport {
        g: g.clone(),
        horizon,
        ratio: r,
        fekete_bound,
        checkpoints,
        decreasing,
        vanishing: decreasing && fekete_bound < SUBLINEARITY_TOLERANCE,
    })
}

/// Whether `σ(x + y) = σ(x) + σ(y)` holds exactly.
pub fn is_additive(sigma: &SupportFunctional, x: &[i64], y: &[i64]) -> bool {
    let s: Vec<i64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    sigma.evaluate(&s) == sigma.evaluate(x) + sigma.evaluate(y)
}

pub fn scale_rational(k: i64) -> Rational64 {
    Rational64::from_integer(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{GroupSpec, LengthFormula};

    #[test]
    fn lattices_are_separated() {
        for m in 1..=3 {
            let l = LengthFunction::word(GroupSpec::standard(GroupKind::FreeAbelian { rank: m }));
            let c = separation_certificate(&l).unwrap();
            assert_eq!(c.rank, m);
            assert!(c.separated);
            let minor = c.invertible_minor.unwrap();
            assert_eq!(minor.rows.len(), m);
            assert_eq!(minor.columns, (0..m).collect::<Vec<_>>());
        }
    }

    #[test]
    fn central_formula_is_not_separated() {
        let l = LengthFunction::formula(LengthFormula::CentralSqrt);
        let c = separation_certificate(&l).unwrap();
        assert!(!c.separated);
        assert_eq!(c.witness_kind, WitnessKind::SublinearityFailure);
        let w = c.sublinearity.unwrap();
        assert!((w.ratio - 0.04).abs() < 1e-15);
        assert!(w.fekete_bound < SUBLINEARITY_TOLERANCE);
    }

    #[test]
    fn integers_have_no_witness() {
        let l = LengthFunction::word(GroupSpec::standard(GroupKind::FreeAbelian { rank: 1 }));
        let w = sublinearity_witness(&l, &GroupElement::Lattice(vec![1]), 10_000).unwrap();
        assert_eq!(w.ratio, 1.0);
        assert!(!w.vanishing);
        let t = GroupElement::LatticeTorsion(vec![0], 1);
        let lt = LengthFunction::word(GroupSpec::standard(GroupKind::FreeAbelianTimesCyclic { rank: 1, torsion: 3 }));
        assert!(matches!(sublinearity_witness(&lt, &t, 10), Err(Error::TorsionElement(_))));
    }

    #[test]
    fn scaling_doubles_functionals() {
        let l = LengthFunction::word(GroupSpec::hexagonal());
        let c1 = separation_certificate(&l).unwrap();
        let c2 = separation_certificate(&l.scaled(scale_rational(2)).unwrap()).unwrap();
        assert_eq!(c1.rank, c2.rank);
        assert_eq!(c1.separated, c2.separated);
        for (a, b) in c1.functionals.iter().zip(&c2.functionals) {
            for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                assert_eq!(x * polytope::rational(2), *y);
            }
        }
    }

    #[test]
    fn norms_are_separated() {
        for n in [NormSpec::L1, NormSpec::L2, NormSpec::LInf] {
            let l = LengthFunction::norm(2, n).unwrap();
            assert!(separation_certificate(&l).unwrap().separated);
        }
    }

    #[test]
    fn additivity() {
        let f = facets(&GroupSpec::hexagonal()).unwrap();
        assert!(f.iter().all(|s| is_additive(s, &[3, -1], &[-2, 5])));
    }
}
