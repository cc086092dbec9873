use num_integer::Integer;
use serde::Serialize;

use super::{CMatrix, CrossedElement, TruncatedHilbert};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupKind};

/// Subgroups given by decidable predicates on canonical coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Subgroup {
    Whole,
    Trivial,
    /// `{g : p_G(g) ∈ nZ^m}`; for cyclic groups the multiples of `n`.
    Multiples(u64),
    /// `{g : φ·p_G(g) = 0}`.
    Kernel(Vec<i64>),
    Center,
    /// An explicit finite subgroup.
    Finite(Vec<GroupElement>),
}

impl Subgroup {
    pub fn validate(&self, kind: GroupKind) -> Result<()> {
        match self {
            Subgroup::Multiples(0) => Err(Error::NotSubgroup("n must be positive".into())),
            Subgroup::Kernel(phi) if phi.len() != kind.abelianization_rank() => Err(Error::NotSubgroup(format!(
                "homomorphism has {} coefficients, abelianization rank is {}",
                phi.len(),
                kind.abelianization_rank()
            ))),
            Subgroup::Finite(els) => {
                if !els.contains(&kind.identity()) {
                    return Err(Error::NotSubgroup("identity missing".into()));
                }
                for a in els {
                    if !kind.contains(a) {
                        return Err(Error::GroupMismatch(format!("{a} is not an element of {kind}")));
                    }
                    for b in els {
                        let ab = kind.multiply_unchecked(a, &kind.inverse_unchecked(b));
                        if !els.contains(&ab) {
                            return Err(Error::NotSubgroup(format!("not closed: {a}·{b}⁻¹ = {ab}")));
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, kind: GroupKind, g: &GroupElement) -> bool {
        match self {
            Subgroup::Whole => true,
            Subgroup::Trivial => *g == kind.identity(),
            Subgroup::Multiples(n) => match g {
                GroupElement::Residue(r) => {
                    let order = kind.order().unwrap_or(1);
                    r % n.gcd(&order) == 0
                }
                _ => kind.abelianize(g).map(|p| p.iter().all(|c| c.rem_euclid(*n as i64) == 0)).unwrap_or(false),
            },
            Subgroup::Kernel(phi) => {
                kind.abelianize(g).map(|p| p.iter().zip(phi).map(|(a, b)| a * b).sum::<i64>() == 0).unwrap_or(false)
            }
            Subgroup::Center => kind.is_central(g),
            Subgroup::Finite(els) => els.contains(g),
        }
    }

    /// `E_H(x) = Σ_{g ∈ H} a_g λ_g`.
    pub fn expectation(&self, kind: GroupKind, x: &CrossedElement) -> Result<CrossedElement> {
        self.validate(kind)?;
        Ok(x.filter(|g| self.contains(kind, g)))
    }
}

/// Keep the block at `(r, c)` exactly when `r c⁻¹ ∈ H`: the compression onto
/// right cosets `Hg`, which agrees with `E_H` on realized elements.
pub fn coset_compression(t: &CMatrix, h: &TruncatedHilbert, sub: &Subgroup, copies: usize) -> Result<CMatrix> {
    let kind = h.kind();
    sub.validate(kind)?;
    let els = h.ball().elements();
    let n = els.len();
    let d = h.d();
    let inv: Vec<GroupElement> = els.iter().map(|g| kind.inverse_unchecked(g)).collect();
    let mut out = t.clone();
    for (r, gr) in els.iter().enumerate() {
        for (c, gc_inv) in inv.iter().enumerate() {
            if sub.contains(kind, &kind.multiply_unchecked(gr, gc_inv)) {
                continue;
            }
            for a in 0..copies {
                for b in 0..copies {
                    out.view_mut((a * n * d + r * d, b * n * d + c * d), (d, d)).fill(super::c64(0.0));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::heisenberg;

    #[test]
    fn membership() {
        let z = GroupKind::FreeAbelian { rank: 1 };
        assert!(Subgroup::Multiples(2).contains(z, &GroupElement::Lattice(vec![-4])));
        assert!(!Subgroup::Multiples(2).contains(z, &GroupElement::Lattice(vec![3])));
        let z2 = GroupKind::FreeAbelian { rank: 2 };
        assert!(Subgroup::Kernel(vec![1, 0]).contains(z2, &GroupElement::Lattice(vec![0, 7])));
        let h3 = GroupKind::Heisenberg3;
        assert!(Subgroup::Center.contains(h3, &heisenberg::c()));
        assert!(!Subgroup::Center.contains(h3, &heisenberg::a()));
        let c6 = GroupKind::FiniteCyclic { order: 6 };
        assert!(Subgroup::Multiples(4).contains(c6, &GroupElement::Residue(2)));
    }

    #[test]
    fn finite_subgroup_validation() {
        let c4 = GroupKind::FiniteCyclic { order: 4 };
        let ok = Subgroup::Finite(vec![GroupElement::Residue(0), GroupElement::Residue(2)]);
        assert!(ok.validate(c4).is_ok());
        let no_id = Subgroup::Finite(vec![GroupElement::Residue(2)]);
        assert!(matches!(no_id.validate(c4), Err(Error::NotSubgroup(_))));
        let open = Subgroup::Finite(vec![GroupElement::Residue(0), GroupElement::Residue(1)]);
        assert!(matches!(open.validate(c4), Err(Error::NotSubgroup(_))));
    }
}
