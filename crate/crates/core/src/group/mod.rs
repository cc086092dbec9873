//! Concrete finitely generated groups with canonical element encodings.
//!
//! Every element is stored in a unique canonical form, so equality, hashing
//! and ordering are exact integer operations.

mod ball;
mod length;

pub use ball::{BallTable, DEFAULT_BALL_CAP};
pub use length::{
    check_length_axioms, AxiomReport, ExplicitTable, LengthFormula, LengthFunction, LengthKind, NormSpec,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The supported group families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    /// `Z^rank`.
    FreeAbelian { rank: usize },
    /// `Z^rank × Z/torsion`.
    FreeAbelianTimesCyclic { rank: usize, torsion: u64 },
    /// Discrete Heisenberg group of upper unitriangular integer 3×3 matrices.
    Heisenberg3,
    /// `Z/order`.
    FiniteCyclic { order: u64 },
}

/// A group element in canonical coordinates.
///
/// Heisenberg triples `(x, y, z)` stand for the matrix with `x` and `y` on the
/// superdiagonal and `z` in the corner.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupElement {
    Lattice(Vec<i64>),
    LatticeTorsion(Vec<i64>, u64),
    Heisenberg([i64; 3]),
    Residue(u64),
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[i64]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        match self {
            GroupElement::Lattice(v) => write!(f, "({})", join(v)),
            GroupElement::LatticeTorsion(v, t) => write!(f, "({};{})", join(v), t),
            GroupElement::Heisenberg([x, y, z]) => write!(f, "[{x},{y},{z}]"),
            GroupElement::Residue(r) => write!(f, "{r}"),
        }
    }
}

impl GroupKind {
    pub fn identity(&self) -> GroupElement {
        match *self {
            GroupKind::FreeAbelian { rank } => GroupElement::Lattice(vec![0; rank]),
            GroupKind::FreeAbelianTimesCyclic { rank, .. } => GroupElement::LatticeTorsion(vec![0; rank], 0),
            GroupKind::Heisenberg3 => GroupElement::Heisenberg([0, 0, 0]),
            GroupKind::FiniteCyclic { .. } => GroupElement::Residue(0),
        }
    }

    /// Rank of the torsion-free part of the abelianization.
    pub fn abelianization_rank(&self) -> usize {
        match *self {
            GroupKind::FreeAbelian { rank } => rank,
            GroupKind::FreeAbelianTimesCyclic { rank, .. } => rank,
            GroupKind::Heisenberg3 => 2,
            GroupKind::FiniteCyclic { .. } => 0,
        }
    }

    pub fn is_abelian(&self) -> bool {
        !matches!(self, GroupKind::Heisenberg3)
    }

    pub fn is_finite(&self) -> bool {
        match *self {
            GroupKind::FiniteCyclic { .. } => true,
            GroupKind::FreeAbelian { rank } => rank == 0,
            _ => false,
        }
    }

    /// Order of the group when finite.
    pub fn order(&self) -> Option<u64> {
        match *self {
            GroupKind::FiniteCyclic { order } => Some(order),
            GroupKind::FreeAbelian { rank: 0 } => Some(1),
            _ => None,
        }
    }

    /// Whether `g` is a canonical element of this group.
    pub fn contains(&self, g: &GroupElement) -> bool {
        match (self, g) {
            (GroupKind::FreeAbelian { rank }, GroupElement::Lattice(v)) => v.len() == *rank,
            (GroupKind::FreeAbelianTimesCyclic { rank, torsion }, GroupElement::LatticeTorsion(v, t)) => {
                v.len() == *rank && t < torsion
            }
            (GroupKind::Heisenberg3, GroupElement::Heisenberg(_)) => true,
            (GroupKind::FiniteCyclic { order }, GroupElement::Residue(r)) => r < order,
            _ => false,
        }
    }

    fn check(&self, g: &GroupElement) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(Error::GroupMismatch(format!("{g} is not an element of {self}")))
        }
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.multiply_unchecked(a, b))
    }

    /// Group law without membership checks; callers guarantee both operands
    /// belong to this group.
    pub(crate) fn multiply_unchecked(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        match (self, a, b) {
            (_, GroupElement::Lattice(u), GroupElement::Lattice(v)) => {
                GroupElement::Lattice(u.iter().zip(v).map(|(x, y)| x + y).collect())
            }
            (
                GroupKind::FreeAbelianTimesCyclic { torsion, .. },
                GroupElement::LatticeTorsion(u, s),
                GroupElement::LatticeTorsion(v, t),
            ) => GroupElement::LatticeTorsion(u.iter().zip(v).map(|(x, y)| x + y).collect(), (s + t) % torsion),
            (_, GroupElement::Heisenberg([x, y, z]), GroupElement::Heisenberg([x2, y2, z2])) => {
                GroupElement::Heisenberg([x + x2, y + y2, z + z2 + x * y2])
            }
            (GroupKind::FiniteCyclic { order }, GroupElement::Residue(r), GroupElement::Residue(s)) => {
                GroupElement::Residue((r + s) % order)
            }
            _ => unreachable!("operands checked against the group kind"),
        }
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        Ok(self.inverse_unchecked(a))
    }

    pub(crate) fn inverse_unchecked(&self, a: &GroupElement) -> GroupElement {
        match (self, a) {
            (_, GroupElement::Lattice(v)) => GroupElement::Lattice(v.iter().map(|x| -x).collect()),
            (GroupKind::FreeAbelianTimesCyclic { torsion, .. }, GroupElement::LatticeTorsion(v, t)) => {
                GroupElement::LatticeTorsion(v.iter().map(|x| -x).collect(), (torsion - t) % torsion)
            }
            (_, GroupElement::Heisenberg([x, y, z])) => GroupElement::Heisenberg([-x, -y, -z + x * y]),
            (GroupKind::FiniteCyclic { order }, GroupElement::Residue(r)) => GroupElement::Residue((order - r) % order),
            _ => unreachable!("operand checked against the group kind"),
        }
    }

    /// `g^k` for any integer `k`.
    pub fn power(&self, g: &GroupElement, k: i64) -> Result<GroupElement> {
        self.check(g)?;
        let base = if k < 0 { self.inverse_unchecked(g) } else { g.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = self.identity();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.multiply_unchecked(&acc, &sq);
            }
            sq = self.multiply_unchecked(&sq, &sq);
            e >>= 1;
        }
        Ok(acc)
    }

    /// Projection `p_G` onto the torsion-free part of the abelianization.
    pub fn abelianize(&self, g: &GroupElement) -> Result<Vec<i64>> {
        self.check(g)?;
        Ok(match g {
            GroupElement::Lattice(v) => v.clone(),
            GroupElement::LatticeTorsion(v, _) => v.clone(),
            GroupElement::Heisenberg([x, y, _]) => vec![*x, *y],
            GroupElement::Residue(_) => Vec::new(),
        })
    }

    /// Whether `g` is central (every element for abelian kinds).
    pub fn is_central(&self, g: &GroupElement) -> bool {
        match g {
            GroupElement::Heisenberg([x, y, _]) => *x == 0 && *y == 0,
            _ => self.contains(g),
        }
    }

    /// Whether `g` has finite order.
    pub fn is_torsion(&self, g: &GroupElement) -> bool {
        match g {
            GroupElement::Lattice(v) | GroupElement::LatticeTorsion(v, _) => v.iter().all(|&c| c == 0),
            GroupElement::Heisenberg(c) => c.iter().all(|&x| x == 0),
            GroupElement::Residue(_) => true,
        }
    }

    /// The symmetric standard generating set.
    pub fn standard_generators(&self) -> Vec<GroupElement> {
        let mut out = Vec::new();
        match *self {
            GroupKind::FreeAbelian { rank } => {
                for i in 0..rank {
                    for s in [1, -1] {
                        let mut v = vec![0; rank];
                        v[i] = s;
                        out.push(GroupElement::Lattice(v));
                    }
                }
            }
            GroupKind::FreeAbelianTimesCyclic { rank, torsion } => {
                for i in 0..rank {
                    for s in [1, -1] {
                        let mut v = vec![0; rank];
                        v[i] = s;
                        out.push(GroupElement::LatticeTorsion(v, 0));
                    }
                }
                if torsion > 1 {
                    out.push(GroupElement::LatticeTorsion(vec![0; rank], 1));
                    if torsion > 2 {
                        out.push(GroupElement::LatticeTorsion(vec![0; rank], torsion - 1));
                    }
                }
            }
            GroupKind::Heisenberg3 => {
                for g in [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]] {
                    out.push(GroupElement::Heisenberg(g));
                }
            }
            GroupKind::FiniteCyclic { order } => {
                if order > 1 {
                    out.push(GroupElement::Residue(1));
                    if order > 2 {
                        out.push(GroupElement::Residue(order - 1));
                    }
                }
            }
        }
        out
    }

    /// Parse an element written as comma separated coordinates, with `;`
    /// separating the torsion residue for `Z^m × Z/n`.
    pub fn parse_element(&self, s: &str) -> Result<GroupElement> {
        let ints = |t: &str| -> Result<Vec<i64>> {
            let t = t.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
            if t.is_empty() {
                return Ok(Vec::new());
            }
            t.split(',').map(|c| c.trim().parse::<i64>().map_err(|e| Error::Parse(format!("{c:?}: {e}")))).collect()
        };
        let g = match *self {
            GroupKind::FreeAbelian { .. } => GroupElement::Lattice(ints(s)?),
            GroupKind::FreeAbelianTimesCyclic { torsion, .. } => {
                let (lat, tor) =
                    s.split_once(';').ok_or_else(|| Error::Parse(format!("expected `coords;residue`, got {s:?}")))?;
                let t = tor.trim().trim_end_matches(')').parse::<i64>().map_err(|e| Error::Parse(e.to_string()))?;
                GroupElement::LatticeTorsion(ints(lat)?, t.rem_euclid(torsion as i64) as u64)
            }
            GroupKind::Heisenberg3 => {
                let v = ints(s)?;
                if v.len() != 3 {
                    return Err(Error::Parse(format!("Heisenberg element needs 3 coordinates: {s:?}")));
                }
                GroupElement::Heisenberg([v[0], v[1], v[2]])
            }
            GroupKind::FiniteCyclic { order } => {
                let v = ints(s)?;
                if v.len() != 1 {
                    return Err(Error::Parse(format!("residue expected: {s:?}")));
                }
                GroupElement::Residue(v[0].rem_euclid(order as i64) as u64)
            }
        };
        self.check(&g)?;
        Ok(g)
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::FreeAbelian { rank: 1 } => write!(f, "Z"),
            GroupKind::FreeAbelian { rank } => write!(f, "Z{rank}"),
            GroupKind::FreeAbelianTimesCyclic { rank, torsion } => write!(f, "Z{rank}xC{torsion}"),
            GroupKind::Heisenberg3 => write!(f, "H3"),
            GroupKind::FiniteCyclic { order } => write!(f, "C{order}"),
        }
    }
}

impl FromStr for GroupKind {
    type Err = Error;

    /// Accepts `Z`, `Zm`, `ZmxCn`, `H3` and `Cn`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num =
            |t: &str| -> Result<u64> { t.parse::<u64>().map_err(|_| Error::Parse(format!("unknown group {s:?}"))) };
        if s.eq_ignore_ascii_case("H3") {
            return Ok(GroupKind::Heisenberg3);
        }
        if s == "Z" {
            return Ok(GroupKind::FreeAbelian { rank: 1 });
        }
        if let Some((a, b)) = s.split_once(['x', 'X']) {
            let rank = if a == "Z" { 1 } else { num(a.strip_prefix('Z').unwrap_or("?"))? };
            let torsion = num(b.strip_prefix('C').unwrap_or("?"))?;
            if torsion == 0 {
                return Err(Error::Parse("torsion order must be positive".into()));
            }
            return Ok(GroupKind::FreeAbelianTimesCyclic { rank: rank as usize, torsion });
        }
        if let Some(r) = s.strip_prefix('Z') {
            return Ok(GroupKind::FreeAbelian { rank: num(r)? as usize });
        }
        if let Some(n) = s.strip_prefix('C') {
            let order = num(n)?;
            if order == 0 {
                return Err(Error::Parse("cyclic order must be positive".into()));
            }
            return Ok(GroupKind::FiniteCyclic { order });
        }
        Err(Error::Parse(format!("unknown group {s:?}")))
    }
}

/// A group together with a finite symmetric generating set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupSpec {
    pub kind: GroupKind,
    pub generators: Vec<GroupElement>,
}

impl GroupSpec {
    /// Validates that `generators` lie in the group, avoid the identity and
    /// are closed under inversion. Duplicates are removed; order is canonical.
    pub fn new(kind: GroupKind, generators: Vec<GroupElement>) -> Result<Self> {
        let id = kind.identity();
        let mut gens = Vec::with_capacity(generators.len());
        for g in generators {
            kind.check(&g)?;
            if g == id {
                return Err(Error::InvalidGenerators("identity is not a generator".into()));
            }
            if !gens.contains(&g) {
                gens.push(g);
            }
        }
        for g in &gens {
            let inv = kind.inverse_unchecked(g);
            if !gens.contains(&inv) {
                return Err(Error::InvalidGenerators(format!(
                    "generating set not symmetric: {g} present but {inv} missing"
                )));
            }
        }
        gens.sort();
        Ok(GroupSpec { kind, generators: gens })
    }

    pub fn standard(kind: GroupKind) -> Self {
        GroupSpec::new(kind, kind.standard_generators()).expect("standard generators are valid")
    }

    /// `Z^2` with `±e1, ±e2, ±(e1+e2)`.
    pub fn hexagonal() -> Self {
        let g = |v: [i64; 2]| GroupElement::Lattice(v.to_vec());
        GroupSpec::new(
            GroupKind::FreeAbelian { rank: 2 },
            vec![g([1, 0]), g([-1, 0]), g([0, 1]), g([0, -1]), g([1, 1]), g([-1, -1])],
        )
        .expect("hexagonal generators are valid")
    }

    /// `Z^2` with the eight king moves.
    pub fn king() -> Self {
        let mut gens = Vec::new();
        for x in -1..=1i64 {
            for y in -1..=1i64 {
                if (x, y) != (0, 0) {
                    gens.push(GroupElement::Lattice(vec![x, y]));
                }
            }
        }
        GroupSpec::new(GroupKind::FreeAbelian { rank: 2 }, gens).expect("king generators are valid")
    }

    /// Named generating sets: `standard`/`diamond`, `hexagonal`, `king`.
    pub fn named(kind: GroupKind, name: &str) -> Result<Self> {
        match name {
            "standard" | "diamond" => Ok(GroupSpec::standard(kind)),
            "hexagonal" | "hex" if kind == (GroupKind::FreeAbelian { rank: 2 }) => Ok(GroupSpec::hexagonal()),
            "king" if kind == (GroupKind::FreeAbelian { rank: 2 }) => Ok(GroupSpec::king()),
            other => Err(Error::Parse(format!("unknown generating set {other:?} for {kind}"))),
        }
    }

    pub fn abelianization_rank(&self) -> usize {
        self.kind.abelianization_rank()
    }

    pub fn identity(&self) -> GroupElement {
        self.kind.identity()
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.kind.multiply(a, b)
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement> {
        self.kind.inverse(a)
    }

    /// Evaluate a word in the generators, given as a product of elements.
    pub fn evaluate_word(&self, word: &[GroupElement]) -> Result<GroupElement> {
        let mut acc = self.identity();
        for w in word {
            acc = self.kind.multiply(&acc, w)?;
        }
        Ok(acc)
    }
}

/// Heisenberg generators `a`, `b` and the central `c`.
pub mod heisenberg {
    use super::GroupElement;

    pub fn a() -> GroupElement {
        GroupElement::Heisenberg([1, 0, 0])
    }
    pub fn b() -> GroupElement {
        GroupElement::Heisenberg([0, 1, 0])
    }
    pub fn c() -> GroupElement {
        GroupElement::Heisenberg([0, 0, 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const H3: GroupKind = GroupKind::Heisenberg3;

    #[test]
    fn heisenberg_law() {
        let p = H3.multiply(&heisenberg::a(), &heisenberg::b()).unwrap();
        assert_eq!(p, GroupElement::Heisenberg([1, 1, 1]));
        let ai = H3.inverse(&heisenberg::a()).unwrap();
        let bi = H3.inverse(&heisenberg::b()).unwrap();
        let comm = [ai, bi, heisenberg::a(), heisenberg::b()]
            .iter()
            .fold(H3.identity(), |acc, g| H3.multiply(&acc, g).unwrap());
        assert_eq!(comm, heisenberg::c());
    }

    #[test]
    fn lattice_and_cyclic() {
        let z2 = GroupKind::FreeAbelian { rank: 2 };
        assert_eq!(z2.inverse(&GroupElement::Lattice(vec![3, -2])).unwrap(), GroupElement::Lattice(vec![-3, 2]));
        let c4 = GroupKind::FiniteCyclic { order: 4 };
        assert_eq!(
            c4.multiply(&GroupElement::Residue(3), &GroupElement::Residue(2)).unwrap(),
            GroupElement::Residue(1)
        );
    }

    #[test]
    fn mismatched_kinds_rejected() {
        let z2 = GroupKind::FreeAbelian { rank: 2 };
        let err = z2.multiply(&GroupElement::Lattice(vec![1, 0]), &heisenberg::a());
        assert!(matches!(err, Err(Error::GroupMismatch(_))));
        assert!(z2.inverse(&GroupElement::Lattice(vec![1])).is_err());
        let c4 = GroupKind::FiniteCyclic { order: 4 };
        assert!(!c4.contains(&GroupElement::Residue(4)));
    }

    #[test]
    fn generating_set_validation() {
        let z = GroupKind::FreeAbelian { rank: 1 };
        let err = GroupSpec::new(z, vec![GroupElement::Lattice(vec![1])]);
        assert!(matches!(err, Err(Error::InvalidGenerators(_))));
        let err = GroupSpec::new(z, vec![GroupElement::Lattice(vec![0])]);
        assert!(matches!(err, Err(Error::InvalidGenerators(_))));
        assert_eq!(GroupSpec::hexagonal().generators.len(), 6);
        assert_eq!(GroupSpec::standard(GroupKind::FiniteCyclic { order: 2 }).generators.len(), 1);
    }

    #[test]
    fn abelianization_ranks() {
        assert_eq!(GroupKind::FreeAbelian { rank: 3 }.abelianization_rank(), 3);
        assert_eq!(GroupKind::FreeAbelianTimesCyclic { rank: 2, torsion: 5 }.abelianization_rank(), 2);
        assert_eq!(H3.abelianization_rank(), 2);
        assert_eq!(GroupKind::FiniteCyclic { order: 7 }.abelianization_rank(), 0);
    }

    #[test]
    fn parsing() {
        assert_eq!("Z2".parse::<GroupKind>().unwrap(), GroupKind::FreeAbelian { rank: 2 });
        assert_eq!("Z".parse::<GroupKind>().unwrap(), GroupKind::FreeAbelian { rank: 1 });
        assert_eq!("h3".parse::<GroupKind>().unwrap(), H3);
        assert_eq!("Z2xC3".parse::<GroupKind>().unwrap(), GroupKind::FreeAbelianTimesCyclic { rank: 2, torsion: 3 });
        assert_eq!("C5".parse::<GroupKind>().unwrap(), GroupKind::FiniteCyclic { order: 5 });
        assert!("Q8".parse::<GroupKind>().is_err());
        let k = GroupKind::FreeAbelianTimesCyclic { rank: 1, torsion: 3 };
        assert_eq!(k.parse_element("2;-1").unwrap(), GroupElement::LatticeTorsion(vec![2], 2));
        assert_eq!(H3.parse_element("(1,2,3)").unwrap(), GroupElement::Heisenberg([1, 2, 3]));
    }

    #[test]
    fn heisenberg_powers() {
        let g = GroupElement::Heisenberg([1, 1, 0]);
        // (x,y,z)^k = (kx, ky, kz + k(k-1)/2 xy)
        for k in -5..=5i64 {
            let expect = GroupElement::Heisenberg([k, k, k * (k - 1) / 2]);
            assert_eq!(H3.power(&g, k).unwrap(), expect);
        }
    }

    fn element(kind: GroupKind) -> BoxedStrategy<GroupElement> {
        match kind {
            GroupKind::FreeAbelian { rank } => {
                proptest::collection::vec(-20i64..20, rank).prop_map(GroupElement::Lattice).boxed()
            }
            GroupKind::FreeAbelianTimesCyclic { rank, torsion } => {
                (proptest::collection::vec(-20i64..20, rank), 0..torsion)
                    .prop_map(|(v, t)| GroupElement::LatticeTorsion(v, t))
                    .boxed()
            }
            GroupKind::Heisenberg3 => {
                (-20i64..20, -20i64..20, -50i64..50).prop_map(|(x, y, z)| GroupElement::Heisenberg([x, y, z])).boxed()
            }
            GroupKind::FiniteCyclic { order } => (0..order).prop_map(GroupElement::Residue).boxed(),
        }
    }

    fn kinds() -> impl Strategy<Value = GroupKind> {
        prop_oneof![
            (1usize..4).prop_map(|rank| GroupKind::FreeAbelian { rank }),
            (1usize..3, 2u64..6).prop_map(|(rank, torsion)| GroupKind::FreeAbelianTimesCyclic { rank, torsion }),
            Just(GroupKind::Heisenberg3),
            (1u64..9).prop_map(|order| GroupKind::FiniteCyclic { order }),
        ]
    }

    proptest! {
        #[test]
        fn group_axioms((kind, a, b, c) in kinds().prop_flat_map(|k| (Just(k), element(k), element(k), element(k)))) {
            let ab_c = kind.multiply(&kind.multiply(&a, &b).unwrap(), &c).unwrap();
            let a_bc = kind.multiply(&a, &kind.multiply(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            let e = kind.identity();
            prop_assert_eq!(kind.multiply(&a, &e).unwrap(), a.clone());
            prop_assert_eq!(kind.multiply(&e, &a).unwrap(), a.clone());
            let ai = kind.inverse(&a).unwrap();
            prop_assert_eq!(kind.multiply(&a, &ai).unwrap(), e.clone());
            prop_assert_eq!(kind.multiply(&ai, &a).unwrap(), e);
        }
    }
}
