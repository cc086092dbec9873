//! Horofunction data: `φ_g(h) = ℓ(h) − ℓ(g⁻¹h)` on balls, Busemann values
//! along rays, and the facet functionals of the generator polytope.

use std::sync::Arc;

use num_rational::{BigRational, Rational64};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::group::{BallTable, GroupElement, GroupKind, GroupSpec, LengthFunction};
use crate::polytope;

/// Lengths of many elements, served from one enclosing ball when possible.
pub(crate) fn lengths_of<'a>(
    spec: &LengthFunction,
    elements: impl IntoIterator<Item = &'a GroupElement>,
    hint_radius: Option<f64>,
) -> Result<Vec<f64>> {
    let big = match hint_radius {
        Some(r) if spec.is_word() => Some(spec.ball(r)?),
        _ => None,
    };
    elements
        .into_iter()
        .map(|x| match big.as_ref().and_then(|b| b.length_of(x)) {
            Some(l) => Ok(l),
            None => spec.length(x),
        })
        .collect()
}

/// `φ_g` restricted to a ball, aligned with the ball order.
#[derive(Clone, Debug, Serialize)]
pub struct PhiFunction {
    pub g: GroupElement,
    pub values: Vec<f64>,
    #[serde(skip)]
    pub ball: Arc<BallTable>,
}

impl PhiFunction {
    pub fn at(&self, h: &GroupElement) -> Option<f64> {
        self.ball.index_of(h).map(|i| self.values[i])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn phi(g: &GroupElement, ball: &Arc<BallTable>, spec: &LengthFunction) -> Result<PhiFunction> {
    let kind = spec.group().kind;
    let ginv = kind.inverse(g)?;
    let lg = spec.length(g)?;
    let shifted: Vec<GroupElement> = ball.elements().iter().map(|h| kind.multiply_unchecked(&ginv, h)).collect();
    let shifted_len = lengths_of(spec, &shifted, Some(ball.radius + lg))?;
    let values = ball.lengths().iter().zip(shifted_len).map(|(l, m)| l - m).collect();
    Ok(PhiFunction { g: g.clone(), values, ball: ball.clone() })
}

/// `φ_g(x)` at a single point.
pub fn phi_at(spec: &LengthFunction, g: &GroupElement, x: &GroupElement) -> Result<f64> {
    let kind = spec.group().kind;
    let y = kind.multiply(&kind.inverse(g)?, x)?;
    Ok(spec.length(x)? - spec.length(&y)?)
}

/// `max_x |φ_{gh}(x) − φ_h(g⁻¹x) − φ_g(x)|` over the ball.
pub fn cocycle_defect(spec: &LengthFunction, g: &GroupElement, h: &GroupElement, ball: &Arc<BallTable>) -> Result<f64> {
    let kind = spec.group().kind;
    let gh = kind.multiply(g, h)?;
    let ginv = kind.inverse(g)?;
    let phi_gh = phi(&gh, ball, spec)?;
    let phi_g = phi(g, ball, spec)?;
    let mut worst = 0.0f64;
    for (i, x) in ball.elements().iter().enumerate() {
        let y = kind.multiply_unchecked(&ginv, x);
        let d = phi_gh.values[i] - phi_at(spec, h, &y)? - phi_g.values[i];
        worst = worst.max(d.abs());
    }
    Ok(worst)
}

fn ser_rationals<S: Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|q| q.to_string()))
}

/// A facet functional `σ` of `conv(p_G(S))`, equal to 1 exactly on the facet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SupportFunctional {
    #[serde(serialize_with = "ser_rationals")]
    pub coefficients: Vec<BigRational>,
    /// Generators whose images lie on the facet.
    pub facet: Vec<GroupElement>,
}

impl SupportFunctional {
    pub fn evaluate(&self, x: &[i64]) -> BigRational {
        polytope::dot(&self.coefficients, x)
    }

    pub fn coefficients_f64(&self) -> Vec<f64> {
        self.coefficients.iter().map(polytope::to_f64).collect()
    }

    /// `k·σ`.
    pub fn scaled(&self, k: Rational64) -> Self {
        let k = BigRational::new((*k.numer()).into(), (*k.denom()).into());
        SupportFunctional {
            coefficients: self.coefficients.iter().map(|c| c * &k).collect(),
            facet: self.facet.clone(),
        }
    }
}

/// Facets of `conv(p_G(S))`, normalised to `σ = 1` on the facet.
pub fn facets(spec: &GroupSpec) -> Result<Vec<SupportFunctional>> {
    let m = spec.abelianization_rank();
    if m == 0 {
        return Err(Error::Precondition(format!(
            "{} has finite abelianization; the generator polytope is a point",
            spec.kind
        )));
    }
    let points: Vec<Vec<i64>> = spec.generators.iter().map(|s| spec.kind.abelianize(s)).collect::<Result<_>>()?;
    let found = polytope::facets(&points, m)?;
    Ok(found
        .into_iter()
        .map(|f| SupportFunctional {
            facet: f.points.iter().map(|&i| spec.generators[i].clone()).collect(),
            coefficients: f.normal,
        })
        .collect())
}

/// Direction of a lattice ray.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Direction {
    Rational(Vec<Rational64>),
    Real(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum RayKind {
    LatticeDirection(Direction),
    /// The word repeated forever; each letter must be a generator.
    WordRepetition(Vec<GroupElement>),
}

/// A ray sampled at `steps` schedule points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RaySpec {
    pub kind: RayKind,
    pub group: GroupSpec,
    pub steps: usize,
}

/// One sampled point `γ(t)` together with the direction parameter `s`
/// satisfying `‖x − s·v‖∞ < 1/i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayPoint {
    pub param: f64,
    pub point: GroupElement,
    pub approximation_error: f64,
}

/// Upper bound on the integer search per point for irrational directions.
pub const KRONECKER_SEARCH_CAP: i64 = 50_000_000;

fn lcm(a: i64, b: i64) -> i64 {
    use num_integer::Integer;
    a.lcm(&b)
}

impl RaySpec {
    pub fn lattice(group: GroupSpec, direction: Direction, steps: usize) -> Self {
        RaySpec { kind: RayKind::LatticeDirection(direction), group, steps }
    }

    pub fn word(group: GroupSpec, word: Vec<GroupElement>, steps: usize) -> Self {
        RaySpec { kind: RayKind::WordRepetition(word), group, steps }
    }

    fn embed(&self, x: Vec<i64>) -> Result<GroupElement> {
        match self.group.kind {
            GroupKind::FreeAbelian { .. } => Ok(GroupElement::Lattice(x)),
            GroupKind::FreeAbelianTimesCyclic { .. } => Ok(GroupElement::LatticeTorsion(x, 0)),
            GroupKind::Heisenberg3 if x.len() == 2 => Ok(GroupElement::Heisenberg([x[0], x[1], 0])),
            k => Err(Error::Precondition(format!("lattice rays need a lattice group, got {k}"))),
        }
    }

    /// The schedule `(s_i, x_i)`, `i = 1..=steps`.
    pub fn schedule(&self) -> Result<Vec<RayPoint>> {
        match &self.kind {
            RayKind::WordRepetition(word) => {
                if word.is_empty() {
                    return Err(Error::Precondition("empty ray word".into()));
                }
                for w in word {
                    if !self.group.generators.contains(w) {
                        return Err(Error::InvalidGenerators(format!("{w} is not a generator")));
                    }
                }
                let mut acc = self.group.identity();
                let mut out = Vec::with_capacity(self.steps);
                for i in 0..self.steps {
                    acc = self.group.multiply(&acc, &word[i % word.len()])?;
                    out.push(RayPoint { param: (i + 1) as f64, point: acc.clone(), approximation_error: 0.0 });
                }
                Ok(out)
            }
            RayKind::LatticeDirection(Direction::Rational(v)) => {
                let m = self.group.abelianization_rank();
                if v.len() != m || v.iter().all(|q| q.is_zero()) {
                    return Err(Error::Precondition(format!("direction must be a non-zero vector of length {m}")));
                }
                let den = v.iter().fold(1, |acc, q| lcm(acc, *q.denom()));
                let w: Vec<i64> = v.iter().map(|q| (q * den).to_integer()).collect();
                (1..=self.steps as i64)
                    .map(|i| {
                        Ok(RayPoint {
                            param: (i * den) as f64,
                            point: self.embed(w.iter().map(|c| c * i).collect())?,
                            approximation_error: 0.0,
                        })
                    })
                    .collect()
            }
            RayKind::LatticeDirection(Direction::Real(v)) => {
                let m = self.group.abelianization_rank();
                let (pivot, vp) = v
                    .iter()
                    .copied()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .ok_or_else(|| Error::Precondition("empty direction".into()))?;
                if v.len() != m || vp == 0.0 || v.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Precondition(format!(
                        "direction must be a finite non-zero vector of length {m}"
                    )));
                }
                let _ = pivot;
                let mut out = Vec::with_capacity(self.steps);
                let mut n = 0i64;
                for i in 1..=self.steps {
                    let tol = 1.0 / i as f64;
                    let start = n;
                    loop {
                        n += 1;
                        if n - start > KRONECKER_SEARCH_CAP {
                            return Err(Error::Precondition(format!(
                                "no lattice point within 1/{i} of the ray found in {KRONECKER_SEARCH_CAP} steps"
                            )));
                        }
                        let t = n as f64 / vp.abs();
                        let x: Vec<i64> = v.iter().map(|c| (c * t).round() as i64).collect();
                        let err = x.iter().zip(v).map(|(&xi, c)| (xi as f64 - c * t).abs()).fold(0.0, f64::max);
                        if err < tol {
                            out.push(RayPoint { param: t, point: self.embed(x)?, approximation_error: err });
                            break;
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BusemannEstimate {
    pub g: GroupElement,
    pub value: f64,
    /// Oscillation of `φ_g(γ(t))` over the last quarter of the schedule.
    pub tail_variation: f64,
    pub samples: usize,
}

pub fn busemann_along_ray(ray: &RaySpec, spec: &LengthFunction, g: &GroupElement) -> Result<BusemannEstimate> {
    if ray.group != *spec.group() {
        return Err(Error::GroupMismatch("ray and length live on different groups".into()));
    }
    let schedule = ray.schedule()?;
    if schedule.is_empty() {
        return Err(Error::Precondition("ray schedule is empty".into()));
    }
    let values: Vec<f64> = schedule.iter().map(|p| phi_at(spec, g, &p.point)).collect::<Result<_>>()?;
    let tail = values.len().div_ceil(4).max(1);
    let last = &values[values.len() - tail..];
    let hi = last.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = last.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BusemannEstimate {
        g: g.clone(),
        value: *values.last().expect("non-empty"),
        tail_variation: hi - lo,
        samples: values.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicReport {
    pub horizon: f64,
    pub max_defect: f64,
    pub pairs: usize,
}

/// Largest `|d(γ_t, γ_s) + d(γ_s, e) − t|` over schedule pairs `s ≤ t ≤ horizon`,
/// with `t = ℓ(γ_t)` for lattice rays and the prefix length for word rays.
pub fn check_ray_geodesic(ray: &RaySpec, spec: &LengthFunction, horizon: f64) -> Result<GeodesicReport> {
    let kind = spec.group().kind;
    let mut pts: Vec<(f64, GroupElement)> = vec![(0.0, kind.identity())];
    for p in ray.schedule()? {
        let t = match ray.kind {
            RayKind::WordRepetition(_) => p.param,
            RayKind::LatticeDirection(_) => spec.length(&p.point)?,
        };
        if t <= horizon {
            pts.push((t, p.point));
        }
    }
    let lens: Vec<f64> = pts.iter().map(|(_, x)| spec.length(x)).collect::<Result<_>>()?;
    let inverses: Vec<GroupElement> = pts.iter().map(|(_, x)| kind.inverse_unchecked(x)).collect();
    let mut report = GeodesicReport { horizon, max_defect: 0.0, pairs: 0 };
    for (t, xt) in &pts {
        for (k, (s, _)) in pts.iter().enumerate() {
            if s > t {
                continue;
            }
            let d = spec.length(&kind.multiply_unchecked(&inverses[k], xt))?;
            let defect = (d + lens[k] - t).abs();
            report.max_defect = report.max_defect.max(defect);
            report.pairs += 1;
        }
    }
    Ok(report)
}

/// `σ(p_G(g))` as a float, for comparison with Busemann estimates.
pub fn functional_value(sigma: &SupportFunctional, kind: GroupKind, g: &GroupElement) -> Result<f64> {
    let x = kind.abelianize(g)?;
    Ok(sigma.evaluate(&x).to_f64().unwrap_or(f64::NAN))
}

/// The facet whose relative interior contains the ray direction, if unique.
pub fn facet_of_direction<'a>(facets: &'a [SupportFunctional], v: &[i64]) -> Option<&'a SupportFunctional> {
    let values: Vec<BigRational> = facets.iter().map(|f| f.evaluate(v)).collect();
    let best = values.iter().max()?;
    if best.is_negative() || best.is_zero() {
        return None;
    }
    let mut hits = facets.iter().zip(&values).filter(|(_, x)| *x == best);
    let first = hits.next()?.0;
    if hits.next().is_some() {
        None
    } else {
        Some(first)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::heisenberg;
    use crate::polytope::rational;

    fn lat(v: &[i64]) -> GroupElement {
        GroupElement::Lattice(v.to_vec())
    }

    fn word_z(rank: usize) -> LengthFunction {
        LengthFunction::word(GroupSpec::standard(GroupKind::FreeAbelian { rank }))
    }

    #[test]
    fn phi_values() {
        let l = word_z(1);
        let ball = l.ball(6.0).unwrap();
        let p = phi(&lat(&[2]), &ball, &l).unwrap();
        assert_eq!(p.at(&lat(&[5])), Some(2.0));
        assert_eq!(p.at(&lat(&[0])), Some(-2.0));
        assert_eq!(p.at(&lat(&[2])), Some(2.0));
        assert!(p.max_abs() <= 2.0);
        let e = phi(&lat(&[0]), &ball, &l).unwrap();
        assert!(e.values.iter().all(|&v| v == 0.0));

        let l2 = word_z(2);
        let b2 = l2.ball(4.0).unwrap();
        let p2 = phi(&lat(&[1, 0]), &b2, &l2).unwrap();
        assert_eq!(p2.at(&lat(&[-3, 0])), Some(-1.0));
    }

    #[test]
    fn cocycle_is_exact() {
        let l = word_z(2);
        let ball = l.ball(8.0).unwrap();
        assert_eq!(cocycle_defect(&l, &lat(&[1, 0]), &lat(&[0, 1]), &ball).unwrap(), 0.0);
        let h = LengthFunction::word(GroupSpec::standard(GroupKind::Heisenberg3));
        let hb = h.ball(6.0).unwrap();
        assert_eq!(cocycle_defect(&h, &heisenberg::a(), &heisenberg::b(), &hb).unwrap(), 0.0);
        let e = h.group().identity();
        assert_eq!(cocycle_defect(&h, &e, &e, &hb).unwrap(), 0.0);
    }

    #[test]
    fn diamond_facets() {
        let f = facets(&GroupSpec::standard(GroupKind::FreeAbelian { rank: 2 })).unwrap();
        assert_eq!(f.len(), 4);
        let xy = f.iter().find(|s| s.coefficients == vec![rational(1), rational(1)]).unwrap();
        assert_eq!(xy.facet, vec![lat(&[0, 1]), lat(&[1, 0])]);
        for s in &f {
            let neg: Vec<_> = s.coefficients.iter().map(|c| -c).collect();
            assert!(f.iter().any(|t| t.coefficients == neg));
        }
    }

    #[test]
    fn heisenberg_and_segment_facets() {
        assert_eq!(facets(&GroupSpec::standard(GroupKind::Heisenberg3)).unwrap().len(), 4);
        let z = facets(&GroupSpec::standard(GroupKind::FreeAbelian { rank: 1 })).unwrap();
        assert_eq!(z.len(), 2);
        assert!(facets(&GroupSpec::standard(GroupKind::FiniteCyclic { order: 3 })).is_err());
    }

    #[test]
    fn busemann_on_integers() {
        let l = word_z(1);
        let ray = RaySpec::lattice(l.group().clone(), Direction::Rational(vec![Rational64::from_integer(1)]), 20);
        let b = busemann_along_ray(&ray, &l, &lat(&[3])).unwrap();
        assert_eq!(b.value, 3.0);
        assert_eq!(b.tail_variation, 0.0);
    }

    #[test]
    fn busemann_diagonal_matches_facet() {
        let l = word_z(2);
        let half = Rational64::new(1, 2);
        let ray = RaySpec::lattice(l.group().clone(), Direction::Rational(vec![half, half]), 16);
        let b = busemann_along_ray(&ray, &l, &lat(&[1, 0])).unwrap();
        let f = facets(l.group()).unwrap();
        let sigma = facet_of_direction(&f, &[1, 1]).unwrap();
        assert_eq!(b.value, functional_value(sigma, l.group().kind, &lat(&[1, 0])).unwrap());
        assert_eq!(b.tail_variation, 0.0);
    }

    #[test]
    fn heisenberg_walsh_ray() {
        let h = LengthFunction::word(GroupSpec::standard(GroupKind::Heisenberg3));
        let ray = RaySpec::word(h.group().clone(), vec![heisenberg::a(), heisenberg::b()], 12);
        let b = busemann_along_ray(&ray, &h, &heisenberg::a()).unwrap();
        assert_eq!(b.value, 1.0);
        let g = check_ray_geodesic(&ray, &h, 12.0).unwrap();
        assert_eq!(g.max_defect, 0.0);
    }

    #[test]
    fn backtracking_word_is_not_geodesic() {
        let h = LengthFunction::word(GroupSpec::standard(GroupKind::Heisenberg3));
        let ainv = h.group().inverse(&heisenberg::a()).unwrap();
        let ray = RaySpec::word(h.group().clone(), vec![heisenberg::a(), ainv], 6);
        assert!(check_ray_geodesic(&ray, &h, 6.0).unwrap().max_defect > 0.0);
    }

    #[test]
    fn real_direction_schedule() {
        let l = word_z(2);
        let v = vec![1.0, 2f64.sqrt()];
        let ray = RaySpec::lattice(l.group().clone(), Direction::Real(v.clone()), 12);
        let sched = ray.schedule().unwrap();
        for (i, p) in sched.iter().enumerate() {
            assert!(p.approximation_error < 1.0 / (i + 1) as f64);
        }
        assert!(sched.windows(2).all(|w| w[0].param < w[1].param));
    }
}
