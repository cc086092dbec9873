use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_integer::Roots;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::ball::CayleyBfs;
use super::{BallTable, GroupElement, GroupKind, GroupSpec, DEFAULT_BALL_CAP};
use crate::error::{Error, Result};
use crate::polytope;

/// Norms on `Z^m` restricted to the lattice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum NormSpec {
    L1,
    L2,
    LInf,
    /// Gauge of `conv(vertices)`; the vertex set must be centrally symmetric
    /// and span.
    Polytope {
        vertices: Vec<Vec<i64>>,
    },
}

/// Closed-form lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LengthFormula {
    /// `ℓ(k) = 2⌈2√|k|⌉` on `Z`, the restriction of the Heisenberg word
    /// length to the centre.
    CentralSqrt,
}

impl LengthFormula {
    pub fn eval(&self, k: i64) -> u64 {
        match self {
            LengthFormula::CentralSqrt => {
                let n = k.unsigned_abs();
                // smallest m with m² ≥ 4n
                let four_n = 4 * n as u128;
                let mut m = four_n.sqrt();
                if m * m < four_n {
                    m += 1;
                }
                2 * m as u64
            }
        }
    }
}

/// A length given by its values on a finite set of elements.
///
/// `complete_radius` promises that every element of length at most that
/// radius appears in `values`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplicitTable {
    pub values: BTreeMap<GroupElement, f64>,
    pub complete_radius: f64,
}

impl ExplicitTable {
    pub fn new(values: BTreeMap<GroupElement, f64>, complete_radius: f64) -> Self {
        ExplicitTable { values, complete_radius }
    }

    /// Tabulate `f` on `Z` over `[-n, n]`. Completeness holds up to the
    /// smaller of the two boundary values when `f` grows with `|k|`.
    pub fn on_integers(n: i64, f: impl Fn(i64) -> f64) -> Self {
        let values: BTreeMap<_, _> = (-n..=n).map(|k| (GroupElement::Lattice(vec![k]), f(k))).collect();
        let edge = f(n + 1).min(f(-n - 1));
        // largest value strictly below anything outside the table
        let complete_radius = values.values().copied().filter(|&v| v < edge).fold(0.0, f64::max);
        ExplicitTable { values, complete_radius }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum LengthKind {
    Word,
    Norm(NormSpec),
    Table(ExplicitTable),
    Formula(LengthFormula),
}

/// A length function on a group, with memoized balls.
#[derive(Clone, Debug)]
pub struct LengthFunction {
    group: GroupSpec,
    kind: LengthKind,
    scale: Rational64,
    pseudo: bool,
    cap: usize,
    bfs: Arc<Mutex<CayleyBfs>>,
    balls: Arc<Mutex<HashMap<u64, Arc<BallTable>>>>,
    polytope: Option<Arc<Vec<polytope::Facet>>>,
}

impl LengthFunction {
    fn build(group: GroupSpec, kind: LengthKind) -> Self {
        let bfs = CayleyBfs::new(group.kind, group.generators.clone());
        LengthFunction {
            group,
            kind,
            scale: Rational64::from_integer(1),
            pseudo: false,
            cap: DEFAULT_BALL_CAP,
            bfs: Arc::new(Mutex::new(bfs)),
            balls: Arc::new(Mutex::new(HashMap::new())),
            polytope: None,
        }
    }

    /// Word length with respect to the generating set of `group`.
    pub fn word(group: GroupSpec) -> Self {
        LengthFunction::build(group, LengthKind::Word)
    }

    /// A norm on `Z^m` restricted to lattice points.
    pub fn norm(rank: usize, norm: NormSpec) -> Result<Self> {
        let group = GroupSpec::standard(GroupKind::FreeAbelian { rank });
        let facets = match &norm {
            NormSpec::Polytope { vertices } => Some(Arc::new(polytope::facets(vertices, rank)?)),
            _ => None,
        };
        let mut l = LengthFunction::build(group, LengthKind::Norm(norm));
        l.polytope = facets;
        Ok(l)
    }

    pub fn table(group: GroupSpec, table: ExplicitTable) -> Self {
        LengthFunction::build(group, LengthKind::Table(table))
    }

    /// A closed-form length on `Z`.
    pub fn formula(formula: LengthFormula) -> Self {
        let group = GroupSpec::standard(GroupKind::FreeAbelian { rank: 1 });
        LengthFunction::build(group, LengthKind::Formula(formula))
    }

    /// `k·ℓ` for a positive rational `k`.
    pub fn scaled(&self, k: Rational64) -> Result<Self> {
        if k <= Rational64::from_integer(0) {
            return Err(Error::Precondition(format!("scale must be positive, got {k}")));
        }
        let mut out = self.clone();
        out.scale = self.scale * k;
        out.balls = Arc::new(Mutex::new(HashMap::new()));
        Ok(out)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self.balls = Arc::new(Mutex::new(HashMap::new()));
        self
    }

    /// Mark as a pseudo-length (non-identity elements may have length 0).
    pub fn pseudo(mut self, pseudo: bool) -> Self {
        self.pseudo = pseudo;
        self
    }

    pub fn is_pseudo(&self) -> bool {
        self.pseudo
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn kind(&self) -> &LengthKind {
        &self.kind
    }

    pub fn scale(&self) -> Rational64 {
        self.scale
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn is_word(&self) -> bool {
        matches!(self.kind, LengthKind::Word)
    }

    fn scale_f64(&self) -> f64 {
        self.scale.to_f64().unwrap_or(f64::NAN)
    }

    fn lattice<'a>(&self, g: &'a GroupElement) -> Result<&'a [i64]> {
        match g {
            GroupElement::Lattice(v) if self.group.kind.contains(g) => Ok(v),
            _ => Err(Error::GroupMismatch(format!("{g} is not an element of {}", self.group.kind))),
        }
    }

    fn norm_value(&self, norm: &NormSpec, x: &[i64]) -> f64 {
        match norm {
            NormSpec::L1 => x.iter().map(|c| c.unsigned_abs() as f64).sum(),
            NormSpec::L2 => x.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt(),
            NormSpec::LInf => x.iter().map(|c| c.unsigned_abs() as f64).fold(0.0, f64::max),
            NormSpec::Polytope { .. } => {
                let facets = self.polytope.as_ref().expect("facets computed at construction");
                polytope::to_f64(&polytope::gauge(facets, x))
            }
        }
    }

    /// Unscaled value.
    fn raw_length(&self, g: &GroupElement) -> Result<f64> {
        match &self.kind {
            LengthKind::Word => {
                self.group.kind.check(g)?;
                let mut bfs = self.bfs.lock().expect("bfs lock");
                Ok(bfs.find(g, self.cap)? as f64)
            }
            LengthKind::Norm(n) => Ok(self.norm_value(n, self.lattice(g)?)),
            LengthKind::Table(t) => {
                self.group.kind.check(g)?;
                t.values.get(g).copied().ok_or_else(|| Error::LengthUnavailable(format!("{g} (not in table)")))
            }
            LengthKind::Formula(f) => Ok(f.eval(self.lattice(g)?[0]) as f64),
        }
    }

    pub fn length(&self, g: &GroupElement) -> Result<f64> {
        Ok(self.raw_length(g)? * self.scale_f64())
    }

    /// The ball `{g : ℓ(g) ≤ r}`, computed once per radius and shared.
    pub fn ball(&self, r: f64) -> Result<Arc<BallTable>> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::Precondition(format!("radius must be finite and non-negative, got {r}")));
        }
        let key = r.to_bits();
        if let Some(b) = self.balls.lock().expect("ball cache").get(&key) {
            return Ok(b.clone());
        }
        let s = self.scale_f64();
        let raw_r = r / s;
        let (pairs, covers) = match &self.kind {
            LengthKind::Word => {
                let steps = (raw_r + 1e-9).floor() as u32;
                let mut bfs = self.bfs.lock().expect("bfs lock");
                bfs.grow_to(steps, self.cap)?;
                let pairs: Vec<_> =
                    bfs.dist.iter().filter(|(_, &d)| d <= steps).map(|(g, &d)| (g.clone(), d as f64 * s)).collect();
                let covers = (bfs.exhausted && pairs.len() == bfs.dist.len())
                    || self.group.kind.order() == Some(pairs.len() as u64);
                (pairs, covers)
            }
            LengthKind::Norm(n) => {
                let rank = self.group.kind.abelianization_rank();
                let reach = match n {
                    NormSpec::Polytope { vertices } => {
                        vertices.iter().flat_map(|v| v.iter().map(|c| c.unsigned_abs())).max().unwrap_or(0) as f64
                    }
                    _ => 1.0,
                };
                let bound = (raw_r * reach + 1e-9).floor() as i64;
                let side = (2 * bound + 1) as f64;
                let count = side.powi(rank as i32);
                if count > self.cap as f64 {
                    return Err(Error::CapExceeded { count: count as usize, radius: r, cap: self.cap });
                }
                let mut pairs = Vec::new();
                let mut x = vec![-bound; rank];
                loop {
                    let v = self.norm_value(n, &x);
                    if v <= raw_r + 1e-12 {
                        pairs.push((GroupElement::Lattice(x.clone()), v * s));
                    }
                    // odometer increment over the box
                    let mut i = 0;
                    loop {
                        if i == rank {
                            break;
                        }
                        x[i] += 1;
                        if x[i] <= bound {
                            break;
                        }
                        x[i] = -bound;
                        i += 1;
                    }
                    if i == rank {
                        break;
                    }
                }
                (pairs, false)
            }
            LengthKind::Table(t) => {
                if raw_r > t.complete_radius + 1e-12 {
                    return Err(Error::LengthUnavailable(format!(
                        "ball of radius {r} (table complete only up to {})",
                        t.complete_radius * s
                    )));
                }
                let pairs =
                    t.values.iter().filter(|(_, &v)| v <= raw_r + 1e-12).map(|(g, &v)| (g.clone(), v * s)).collect();
                (pairs, false)
            }
            LengthKind::Formula(f) => {
                let mut pairs = vec![(GroupElement::Lattice(vec![0]), 0.0)];
                let mut k = 1i64;
                while (f.eval(k) as f64) <= raw_r + 1e-12 {
                    if pairs.len() + 2 > self.cap {
                        return Err(Error::CapExceeded { count: pairs.len() + 2, radius: r, cap: self.cap });
                    }
                    let v = f.eval(k) as f64 * s;
                    pairs.push((GroupElement::Lattice(vec![k]), v));
                    pairs.push((GroupElement::Lattice(vec![-k]), v));
                    k += 1;
                }
                (pairs, false)
            }
        };
        if pairs.len() > self.cap {
            return Err(Error::CapExceeded { count: pairs.len(), radius: r, cap: self.cap });
        }
        let table = Arc::new(BallTable::from_pairs(r, pairs, covers));
        self.balls.lock().expect("ball cache").insert(key, table.clone());
        Ok(table)
    }
}

/// Largest violations of the length axioms found on a ball.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub radius: f64,
    pub identity: f64,
    pub symmetry: f64,
    pub subadditivity: f64,
    pub pairs_checked: usize,
}

impl AxiomReport {
    pub fn max_violation(&self) -> f64 {
        self.identity.max(self.symmetry).max(self.subadditivity)
    }
}

/// Checks `ℓ(e) = 0`, symmetry on `B_r` and subadditivity on pairs from
/// `B_{r/2}`.
pub fn check_length_axioms(spec: &LengthFunction, r: f64) -> Result<AxiomReport> {
    let kind = spec.group.kind;
    let ball = spec.ball(r)?;
    let half = spec.ball(r / 2.0)?;
    let mut report = AxiomReport { radius: r, identity: spec.length(&kind.identity())?.abs(), ..Default::default() };
    for (g, l) in ball.iter() {
        let inv = kind.inverse_unchecked(g);
        let li = spec.length(&inv)?;
        report.symmetry = report.symmetry.max((l - li).abs());
    }
    for (g, lg) in half.iter() {
        for (h, lh) in half.iter() {
            let gh = kind.multiply_unchecked(g, h);
            let l = spec.length(&gh)?;
            report.subadditivity = report.subadditivity.max(l - lg - lh);
            report.pairs_checked += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::heisenberg;

    fn z(rank: usize) -> GroupKind {
        GroupKind::FreeAbelian { rank }
    }

    #[test]
    fn lattice_word_length_is_l1() {
        let l = LengthFunction::word(GroupSpec::standard(z(2)));
        assert_eq!(l.length(&GroupElement::Lattice(vec![3, -2])).unwrap(), 5.0);
        let ball = l.ball(4.0).unwrap();
        for (g, v) in ball.iter() {
            let GroupElement::Lattice(x) = g else { unreachable!() };
            assert_eq!(v, (x[0].abs() + x[1].abs()) as f64);
        }
        assert_eq!(ball.element(0), &GroupElement::Lattice(vec![0, 0]));
    }

    #[test]
    fn integer_ball_count() {
        let l = LengthFunction::word(GroupSpec::standard(z(1)));
        assert_eq!(l.ball(3.0).unwrap().len(), 7);
    }

    #[test]
    fn heisenberg_centre_length() {
        let l = LengthFunction::word(GroupSpec::standard(GroupKind::Heisenberg3));
        assert_eq!(l.length(&heisenberg::c()).unwrap(), 4.0);
    }

    #[test]
    fn formula_values() {
        let f = LengthFormula::CentralSqrt;
        let got: Vec<u64> = (0..=9).map(|k| f.eval(k)).collect();
        assert_eq!(got, vec![0, 4, 6, 8, 8, 10, 10, 12, 12, 12]);
        assert_eq!(f.eval(10_000), 400);
        assert_eq!(f.eval(-4), 8);
    }

    #[test]
    fn ball_is_memoized_and_ordered() {
        let l = LengthFunction::word(GroupSpec::standard(z(1)));
        let a = l.ball(2.0).unwrap();
        let b = l.ball(2.0).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let els: Vec<String> = a.elements().iter().map(|g| g.to_string()).collect();
        assert_eq!(els, ["(0)", "(-1)", "(1)", "(-2)", "(2)"]);
    }

    #[test]
    fn finite_group_ball_covers() {
        let l = LengthFunction::word(GroupSpec::standard(GroupKind::FiniteCyclic { order: 4 }));
        let b = l.ball(10.0).unwrap();
        assert_eq!(b.len(), 4);
        assert!(b.covers_group);
        assert!(!l.ball(1.0).unwrap().covers_group);
    }

    #[test]
    fn norm_balls() {
        let l1 = LengthFunction::norm(2, NormSpec::L1).unwrap();
        assert_eq!(l1.ball(2.0).unwrap().len(), 13);
        let linf = LengthFunction::norm(2, NormSpec::LInf).unwrap();
        assert_eq!(linf.ball(1.0).unwrap().len(), 9);
        let hex = NormSpec::Polytope {
            vertices: vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1], vec![1, 1], vec![-1, -1]],
        };
        let p = LengthFunction::norm(2, hex).unwrap();
        assert_eq!(p.length(&GroupElement::Lattice(vec![2, 1])).unwrap(), 2.0);
        assert_eq!(p.length(&GroupElement::Lattice(vec![1, -1])).unwrap(), 2.0);
    }

    #[test]
    fn axioms_hold_for_genuine_lengths() {
        let l = LengthFunction::word(GroupSpec::standard(z(1)));
        assert_eq!(check_length_axioms(&l, 10.0).unwrap().max_violation(), 0.0);
        let n = LengthFunction::norm(2, NormSpec::L1).unwrap();
        assert_eq!(check_length_axioms(&n, 6.0).unwrap().max_violation(), 0.0);
        let h = LengthFunction::word(GroupSpec::standard(GroupKind::Heisenberg3));
        assert_eq!(check_length_axioms(&h, 4.0).unwrap().max_violation(), 0.0);
    }

    #[test]
    fn corrupted_table_is_reported() {
        let mut t = ExplicitTable::on_integers(12, |k| k.abs() as f64);
        assert_eq!(t.complete_radius, 12.0);
        t.values.insert(GroupElement::Lattice(vec![3]), 10.0);
        let l = LengthFunction::table(GroupSpec::standard(z(1)), t);
        let report = check_length_axioms(&l, 10.0).unwrap();
        assert!(report.max_violation() > 0.0);
        assert_eq!(report.symmetry, 7.0);
    }

    #[test]
    fn scaling_multiplies_values() {
        let l = LengthFunction::word(GroupSpec::standard(z(1)));
        let l2 = l.scaled(Rational64::from_integer(2)).unwrap();
        assert_eq!(l2.length(&GroupElement::Lattice(vec![3])).unwrap(), 6.0);
        assert_eq!(l2.ball(4.0).unwrap().len(), 5);
        assert!(l.scaled(Rational64::from_integer(0)).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let l = LengthFunction::word(GroupSpec::standard(z(2))).with_cap(20);
        assert!(matches!(l.ball(5.0), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn table_outside_range() {
        let t = ExplicitTable::on_integers(5, |k| k.abs() as f64);
        let l = LengthFunction::table(GroupSpec::standard(z(1)), t);
        assert!(l.length(&GroupElement::Lattice(vec![9])).is_err());
        assert!(l.ball(7.0).is_err());
    }
}
