//! Fixtures shared by the benchmarks.

use horocp::operator::{lambda, CMatrix, TruncatedHilbert};
use horocp::{GroupElement, GroupKind, GroupSpec, LengthFunction, Result};

/// Fresh word length (no memoized balls) on the standard generators.
pub fn word_length(kind: GroupKind) -> LengthFunction {
    LengthFunction::word(GroupSpec::standard(kind))
}

/// `P(λ₁ + λ₋₁)P` on `ℓ²(B_R) ⊂ ℓ²(Z)`.
pub fn compressed_laplacian(radius: f64) -> Result<CMatrix> {
    let l = word_length(GroupKind::FreeAbelian { rank: 1 });
    let h = TruncatedHilbert::new(&l, 1, radius)?;
    Ok(lambda(&h, &GroupElement::Lattice(vec![1]))?.matrix + lambda(&h, &GroupElement::Lattice(vec![-1]))?.matrix)
}
