//! Numeric checks of the operator identities and inequalities of the
//! crossed-product construction. Each check returns a [`CheckReport`]; the
//! default suite runs every check with seeded random inputs.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::af::{self, OdometerTriple};
use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupKind, GroupSpec, LengthFunction};
use crate::horoboundary::{cocycle_defect, facets, functional_value};
use crate::nctorus::{self, clock, shift, Angle};
use crate::operator::{
    c64, commutator, coset_compression, dense_norm, lambda, m_ell, max_abs_diff, phi_values, pi_tilde, random, realize,
    realize_twisted, restrict_columns, window_residual, ActionSpec, CMatrix, CrossedElement, Subgroup,
    TruncatedHilbert,
};

pub const EQUALITY_TOL: f64 = 1e-12;
pub const INEQUALITY_TOL: f64 = 1e-9;
/// Dimension cap for the doubled space `H ⊗ ℓ²(B_R)`.
pub const DOUBLED_DIM_CAP: usize = 4096;

/// Names of the checks in suite order.
pub const CHECKS: [&str; 8] = [
    "commutator_identity",
    "cocycle",
    "conditional_expectation",
    "tail_bound",
    "isomorphism_unitary",
    "equicontinuity_nctorus",
    "af_triple",
    "coefficient_bounds",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    /// The formula being checked.
    pub anchor: String,
    pub parameters: BTreeMap<String, Value>,
    /// Largest residual of the equality parts.
    pub residual: Option<f64>,
    pub residual_tolerance: f64,
    /// Smallest slack of the inequality parts.
    pub slack: Option<f64>,
    pub slack_tolerance: f64,
    pub details: BTreeMap<String, f64>,
    pub failures: Vec<String>,
    pub instances: usize,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(name: &str, anchor: &str) -> Self {
        CheckReport {
            name: name.to_string(),
            anchor: anchor.to_string(),
            parameters: BTreeMap::new(),
            residual: None,
            residual_tolerance: EQUALITY_TOL,
            slack: None,
            slack_tolerance: INEQUALITY_TOL,
            details: BTreeMap::new(),
            failures: Vec::new(),
            instances: 1,
            pass: true,
        }
    }

    pub fn param(mut self, key: &str, v: Value) -> Self {
        self.parameters.insert(key.to_string(), v);
        self
    }

    pub fn tolerances(mut self, residual: f64, slack: f64) -> Self {
        self.residual_tolerance = residual;
        self.slack_tolerance = slack;
        self
    }

    pub fn residual(&mut self, key: &str, r: f64) {
        self.details.insert(key.to_string(), r);
        let r = if r.is_nan() { f64::INFINITY } else { r };
        self.residual = Some(self.residual.map_or(r, |x| x.max(r)));
    }

    pub fn slack(&mut self, key: &str, s: f64) {
        self.details.insert(key.to_string(), s);
        let s = if s.is_nan() { f64::NEG_INFINITY } else { s };
        self.slack = Some(self.slack.map_or(s, |x| x.min(s)));
    }

    pub fn detail(&mut self, key: &str, v: f64) {
        self.details.insert(key.to_string(), v);
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        self.failures.push(msg.into());
    }

    pub fn finish(mut self) -> Self {
        self.pass = self.failures.is_empty()
            && self.residual.is_none_or(|r| r <= self.residual_tolerance)
            && self.slack.is_none_or(|s| s >= -self.slack_tolerance);
        self
    }

    /// Worst case over instances (counts add up): residuals and detail values by maximum,
    /// slacks (keys containing "slack") by minimum.
    pub fn aggregate(name: &str, anchor: &str, parameters: BTreeMap<String, Value>, reports: Vec<CheckReport>) -> Self {
        let mut out = CheckReport::new(name, anchor);
        out.parameters = parameters;
        out.instances = reports.iter().map(|r| r.instances).sum();
        if let Some(first) = reports.first() {
            out.residual_tolerance = first.residual_tolerance;
            out.slack_tolerance = first.slack_tolerance;
        }
        for r in reports {
            for (k, v) in r.details {
                let e = out.details.entry(k.clone()).or_insert(v);
                *e = if k.contains("slack") { e.min(v) } else { e.max(v) };
            }
            if let Some(x) = r.residual {
                out.residual = Some(out.residual.map_or(x, |y| y.max(x)));
            }
            if let Some(x) = r.slack {
                out.slack = Some(out.slack.map_or(x, |y| y.min(x)));
            }
            out.failures.extend(r.failures);
        }
        out.finish()
    }
}

fn precise_norm(m: &CMatrix) -> Result<f64> {
    dense_norm(m, crate::operator::DEFAULT_TOL)
}

fn inverse(kind: GroupKind, g: &GroupElement) -> Result<GroupElement> {
    kind.inverse(g)
}

/// `[1 ⊗ M_ℓ, x]` against `Σ φ_g a_g λ_g` on the window `B_{R−r}`.
pub fn check_commutator_identity(x: &CrossedElement, h: &TruncatedHilbert, action: &ActionSpec) -> Result<CheckReport> {
    let r = x.support_radius(h.spec())?;
    let window = h.radius() - r;
    if window < 1.0 {
        return Err(Error::EmptyCompression(format!("window R − r = {window} is below 1")));
    }
    let lhs = commutator(&m_ell(h).matrix, &realize(x, h, action)?.matrix);
    let rhs = realize_twisted(x, h, action)?.matrix;
    let keep = h.window(window);
    let mut rep = CheckReport::new("commutator_identity", "[1⊗M_ℓ, Σ a_g λ_g] = Σ (1⊗φ_g) a_g λ_g")
        .param("radius", json!(h.radius()))
        .param("d", json!(h.d()))
        .param("group", json!(h.kind().to_string()));
    rep.residual("window_residual", window_residual(&lhs, &rhs, h, keep, 1));
    rep.detail("window_columns", keep as f64);
    Ok(rep.finish())
}

/// `φ_{gh} = g.φ_h + φ_g` on the ball of radius `radius`, exactly.
pub fn check_cocycle(
    spec: &LengthFunction,
    pairs: &[(GroupElement, GroupElement)],
    radius: f64,
) -> Result<CheckReport> {
    let ball = spec.ball(radius)?;
    let defects: Vec<f64> = pairs.par_iter().map(|(g, h)| cocycle_defect(spec, g, h, &ball)).collect::<Result<_>>()?;
    let mut rep = CheckReport::new("cocycle", "φ_{gh}(x) = φ_h(g⁻¹x) + φ_g(x)")
        .param("radius", json!(radius))
        .param("pairs", json!(pairs.len()))
        .param("group", json!(spec.group().kind.to_string()))
        .tolerances(0.0, INEQUALITY_TOL);
    rep.residual("max_defect", defects.into_iter().fold(0.0, f64::max));
    rep.instances = pairs.len();
    Ok(rep.finish())
}

/// Both `E_H([D, x]λ_{g⁻¹})λ_g = [D, E_H(xλ_{g⁻¹})λ_g]` identities, for
/// `D = D_A ⊗ 1` and `D = 1 ⊗ M_ℓ`, on the window `B_{R−r−ℓ(g)}`, with
/// contractivity of `E_H` and of the coset compression.
pub fn check_conditional_expectation(
    x: &CrossedElement,
    g: &GroupElement,
    sub: &Subgroup,
    d_a: &CMatrix,
    h: &TruncatedHilbert,
    action: &ActionSpec,
) -> Result<CheckReport> {
    let kind = h.kind();
    sub.validate(kind)?;
    let spec = h.spec();
    let window = h.radius() - x.support_radius(spec)? - spec.length(g)?;
    let keep = h.window(window);
    if keep == 0 {
        return Err(Error::EmptyCompression(format!("window radius {window} holds no ball element")));
    }
    let ginv = inverse(kind, g)?;
    let xm = realize(x, h, action)?.matrix;
    let lg = lambda(h, g)?.matrix;
    let lginv = lambda(h, &ginv)?.matrix;
    let shifted = x.filter(|k| sub.contains(kind, &kind.multiply_unchecked(k, &ginv)));
    let shifted_m = realize(&shifted, h, action)?.matrix;
    let mut rep = CheckReport::new(
        "conditional_expectation",
        "E_H([D, x]λ_{g⁻¹})λ_g = [D, E_H(xλ_{g⁻¹})λ_g] for D = D_A⊗1 and D = 1⊗M_ℓ; ‖E_H(y)‖ ≤ ‖y‖",
    )
    .param("radius", json!(h.radius()))
    .param("g", json!(g.to_string()))
    .param("subgroup", json!(format!("{sub:?}")))
    .tolerances(EQUALITY_TOL, EQUALITY_TOL);
    for (label, dm) in [("dirac_coefficient", h.coefficient(d_a)), ("length", m_ell(h).matrix)] {
        let c = commutator(&dm, &xm);
        let lhs = coset_compression(&(&c * &lginv), h, sub, 1)? * &lg;
        let rhs = commutator(&dm, &shifted_m);
        rep.residual(&format!("{label}_residual"), window_residual(&lhs, &rhs, h, keep, 1));
        let full = precise_norm(&restrict_columns(&c, h, keep, 1))?;
        let compressed = precise_norm(&restrict_columns(&lhs, h, keep, 1))?;
        rep.slack(&format!("{label}_compression_slack"), full - compressed);
    }
    let ex = sub.expectation(kind, x)?;
    let slack = precise_norm(&xm)? - precise_norm(&realize(&ex, h, action)?.matrix)?;
    rep.slack("contractivity_slack", slack);
    Ok(rep.finish())
}

/// `(Σ_{|k|>N} (k+L)⁻²)^{1/2}`: exact partial sums then an Euler–Maclaurin tail.
pub fn tail_bound_factor(n: u64, l: f64) -> Result<f64> {
    if (n as f64) < l.abs() {
        return Err(Error::Precondition(format!("need N ≥ |L|, got N = {n}, L = {l}")));
    }
    const TERMS: u64 = 100_000;
    let last = n + TERMS;
    let mut sum = 0.0;
    // smallest terms first
    for k in (n + 1..=last).rev() {
        let k = k as f64;
        sum += (k + l).powi(-2) + (k - l).powi(-2);
    }
    let tail = |a: f64| {
        let x = last as f64 + a;
        1.0 / x - 0.5 / (x * x) + 1.0 / (6.0 * x.powi(3)) - 1.0 / (30.0 * x.powi(5))
    };
    Ok((sum + tail(l) + tail(-l)).sqrt())
}

fn phi_of(kind: GroupKind, phi: &[i64], g: &GroupElement) -> Result<i64> {
    Ok(kind.abelianize(g)?.iter().zip(phi).map(|(a, b)| a * b).sum())
}

/// `‖Σ_{|φ(g)|>N} a_g λ_g‖ ≤ factor · ‖[1⊗M_φ, x] + Lx‖`: left side at radius
/// `R`, right side at `R + δR`; `δR` doubles on failure up to two times.
#[allow(clippy::too_many_arguments)]
pub fn check_tail_bound(
    x: &CrossedElement,
    spec: &LengthFunction,
    action: &ActionSpec,
    phi: &[i64],
    l: f64,
    n: u64,
    radius: f64,
    margin: f64,
) -> Result<CheckReport> {
    let kind = spec.group().kind;
    if phi.len() != kind.abelianization_rank() || phi.iter().all(|&c| c == 0) {
        return Err(Error::Precondition("φ must be a non-trivial homomorphism to Z".into()));
    }
    let r = x.support_radius(spec)?;
    if r > radius {
        return Err(Error::SupportExceedsBall { support: r, ball: radius });
    }
    let factor = tail_bound_factor(n, l)?;
    let mut tail = CrossedElement::zero(x.d());
    let mut shifted = CrossedElement::zero(x.d());
    for (g, a) in x.terms() {
        let p = phi_of(kind, phi, g)?;
        if p.unsigned_abs() > n {
            tail.add_term(g.clone(), a.clone())?;
        }
        shifted.add_term(g.clone(), a * c64(p as f64 + l))?;
    }
    let h = TruncatedHilbert::new(spec, x.d(), radius)?;
    let lhs = if tail.is_zero() { 0.0 } else { precise_norm(&realize(&tail, &h, action)?.matrix)? };
    let mut delta = margin;
    let mut escalations = 0;
    let (rhs, slack) = loop {
        let big = TruncatedHilbert::new(spec, x.d(), radius + delta)?;
        let rhs = if shifted.is_zero() { 0.0 } else { precise_norm(&realize(&shifted, &big, action)?.matrix)? };
        let slack = factor * rhs - lhs;
        if slack >= -INEQUALITY_TOL || escalations == 2 {
            break (rhs, slack);
        }
        match TruncatedHilbert::new(spec, x.d(), radius + 2.0 * delta) {
            Ok(_) => {
                delta *= 2.0;
                escalations += 1;
            }
            Err(_) => break (rhs, slack),
        }
    };
    let mut rep =
        CheckReport::new("tail_bound", "‖Σ_{|φ(g)|>N} a_g λ_g‖ ≤ (Σ_{|k|>N} (k+L)⁻²)^{1/2} ‖[1⊗M_φ, x] + Lx‖")
            .param("phi", json!(phi))
            .param("L", json!(l))
            .param("N", json!(n))
            .param("radius", json!(radius))
            .param("margin", json!(delta));
    rep.detail("factor", factor);
    rep.detail("lhs", lhs);
    rep.detail("rhs", rhs);
    rep.detail("escalations", escalations as f64);
    rep.slack("slack", slack);
    Ok(rep.finish())
}

/// The three conjugation identities for `U(ξ ⊗ δ_k) = λ̃_k ξ ⊗ δ_k` on
/// `H ⊗ ℓ²(B_R)`, where the doubled representation sends `π̃(a)` to
/// `π̃(α_{k⁻¹}(a))` on the `k`-th summand, `ν̃(f)` to `f(k)` and `λ̃_g` to
/// the shift of the outer index.
pub fn check_isomorphism_unitary(
    a: &CMatrix,
    f: &[f64],
    g: &GroupElement,
    h: &TruncatedHilbert,
    action: &ActionSpec,
) -> Result<CheckReport> {
    let kind = h.kind();
    let ball = h.ball().clone();
    let n = ball.len();
    let inner = h.dim();
    let dim = inner * n;
    if dim > DOUBLED_DIM_CAP {
        return Err(Error::DimensionCap { dim, cap: DOUBLED_DIM_CAP });
    }
    if f.len() != n {
        return Err(Error::Precondition(format!("f needs {n} values on the ball")));
    }
    let lg_len = h.spec().length(g)?;
    let block_diag = |blocks: &dyn Fn(usize) -> Result<CMatrix>| -> Result<CMatrix> {
        let mut m = CMatrix::zeros(dim, dim);
        for k in 0..n {
            m.view_mut((k * inner, k * inner), (inner, inner)).copy_from(&blocks(k)?);
        }
        Ok(m)
    };
    let u = block_diag(&|k| Ok(lambda(h, ball.element(k))?.matrix))?;
    let pi_a = pi_tilde(h, action, a)?.matrix;
    let iota_pi = block_diag(&|k| {
        let kinv = kind.inverse_unchecked(ball.element(k));
        Ok(pi_tilde(h, action, &action.act(&kinv, a)?)?.matrix)
    })?;
    let pi_x1 = block_diag(&|_| Ok(pi_a.clone()))?;
    let nu = block_diag(&|k| Ok(CMatrix::identity(inner, inner) * c64(f[k])))?;
    let lam_inner = lambda(h, g)?.matrix;
    let mut iota_l = CMatrix::zeros(dim, dim);
    let mut l_x_l = CMatrix::zeros(dim, dim);
    for k in 0..n {
        let Some(gk) = ball.index_of(&kind.multiply_unchecked(g, ball.element(k))) else { continue };
        iota_l.view_mut((gk * inner, k * inner), (inner, inner)).copy_from(&CMatrix::identity(inner, inner));
        l_x_l.view_mut((gk * inner, k * inner), (inner, inner)).copy_from(&lam_inner);
    }
    // columns (k, x) with ℓ(k) + ℓ(x) + ℓ(g) ≤ R keep every intermediate in the ball
    let budget = h.radius() - lg_len + 1e-9;
    let d = h.d();
    let mask = |m: CMatrix| -> CMatrix {
        let mut m = m;
        for k in 0..n {
            for xi in 0..n {
                if ball.length_at(k) + ball.length_at(xi) > budget {
                    for al in 0..d {
                        m.column_mut(k * inner + xi * d + al).fill(c64(0.0));
                    }
                }
            }
        }
        m
    };
    let ustar = u.adjoint();
    let mut rep = CheckReport::new(
        "isomorphism_unitary",
        "U π̃(a) U* = π_⋊(a)⊗1, U ν̃(f) U* = 1⊗ν(f), U λ̃_g U* = λ_g⊗λ_g with U(ξ⊗δ_g) = λ̃_g ξ⊗δ_g",
    )
    .param("radius", json!(h.radius()))
    .param("d", json!(d))
    .param("g", json!(g.to_string()));
    rep.residual("pi_residual", max_abs_diff(&mask(&u * &iota_pi * &ustar), &mask(pi_x1)));
    rep.residual("nu_residual", max_abs_diff(&mask(&u * &nu * &ustar), &mask(nu.clone())));
    rep.residual("lambda_residual", max_abs_diff(&mask(&u * &iota_l * &ustar), &mask(l_x_l)));
    Ok(rep.finish())
}

/// Clock–shift relations, the rotation on the clock, and the uniform bound
/// `‖[1⊗M_ℓ, α^n(x)]‖ ≤ Σ ‖a_g‖ ‖[1⊗M_ℓ, λ_g]‖` over `ns`.
pub fn check_equicontinuity_nctorus(
    angle: Angle,
    x: &CrossedElement,
    ns: impl IntoIterator<Item = i64>,
    radius: f64,
) -> Result<CheckReport> {
    let ns: Vec<i64> = ns.into_iter().collect();
    let sweep = nctorus::equicontinuity_sweep(angle, x, ns.iter().copied(), radius, crate::operator::DEFAULT_TOL)?;
    let u = clock(angle);
    let rotated = nctorus::rotation_action(angle).act(&GroupElement::Lattice(vec![1]), &u)?;
    let phase = num_complex::Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * angle.theta());
    let v = shift(angle.q);
    let fixed = nctorus::rotation_action(angle).act(&GroupElement::Lattice(vec![1]), &v)?;
    let mut rep = CheckReport::new(
        "equicontinuity_nctorus",
        "uv = e^{2πiθ}vu; α^n(u) = e^{−2πinθ}u; ‖[1⊗M_ℓ, α^n(x)]‖ ≤ Σ ‖a_g‖ ‖[1⊗M_ℓ, λ_g]‖",
    )
    .param("theta", json!(format!("{}/{}", angle.p, angle.q)))
    .param("radius", json!(radius))
    .param("n_min", json!(ns.iter().min()))
    .param("n_max", json!(ns.iter().max()));
    rep.residual("commutation_residual", nctorus::commutation_residual(angle));
    rep.residual("group_commutator_residual", nctorus::group_commutator_residual(angle));
    rep.residual("rotation_residual", max_abs_diff(&rotated, &(&u * phase)).max(max_abs_diff(&fixed, &v)));
    rep.detail("bound", sweep.bound);
    rep.detail("max_value", sweep.values.iter().map(|v| v.1).fold(0.0, f64::max));
    rep.slack("slack", sweep.min_slack);
    Ok(rep.finish())
}

/// Ranks, orthogonality and resolution of the `Q_i`, `[Q_j, π(a)] = 0` for
/// `a ∈ A_i`, `j > i`, and the Lipschitz bound on each level.
pub fn check_af_triple(orders: &[usize], eigenvalues: &[f64], samples: usize, seed: u64) -> Result<CheckReport> {
    let t = OdometerTriple::new(orders, eigenvalues)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = af::check(&t, samples, &mut rng)?;
    let mut rep = CheckReport::new(
        "af_triple",
        "D = Σ λ_i Q_i; rank Q_i = |G/G_i| − |G/G_{i−1}|; Q_iQ_j = 0; [Q_j, π(a)] = 0 for a ∈ A_i, j > i",
    )
    .param("orders", json!(orders))
    .param("eigenvalues", json!(eigenvalues))
    .param("samples", json!(samples));
    rep.residual("projection_residual", r.projection_residual);
    rep.residual("orthogonality_residual", r.orthogonality_residual);
    rep.residual("resolution_residual", r.resolution_residual);
    rep.residual("commutation_residual", r.commutation_residual);
    rep.slack("lipschitz_slack", r.lipschitz_slack);
    for (i, (got, want)) in r.ranks.iter().zip(&r.expected_ranks).enumerate() {
        rep.detail(&format!("rank_q{i}"), *got as f64);
        if got != want {
            rep.fail(format!("rank Q_{i} is {got}, expected {want}"));
        }
    }
    Ok(rep.finish())
}

/// For `x = Σ_h a_h λ_{hg}`: `‖[D_A, a_h]‖ ≤ ‖[D_A⊗1, x]‖` and
/// `‖a_h‖ ≤ ℓ(hg)⁻¹ ‖[1⊗M_ℓ, x]‖` for `hg ≠ e`.
pub fn check_coefficient_bounds(
    x: &CrossedElement,
    g: &GroupElement,
    d_a: &CMatrix,
    h: &TruncatedHilbert,
    action: &ActionSpec,
) -> Result<CheckReport> {
    let kind = h.kind();
    let spec = h.spec();
    let r = x.support_radius(spec)?;
    let window = h.radius() - r;
    if window < r {
        return Err(Error::EmptyCompression(format!(
            "radius {} must be at least twice the support radius {r}",
            h.radius()
        )));
    }
    let keep = h.window(window);
    let xm = realize(x, h, action)?.matrix;
    let da_norm = precise_norm(&restrict_columns(&commutator(&h.coefficient(d_a), &xm), h, keep, 1))?;
    let ml_norm = precise_norm(&restrict_columns(&commutator(&m_ell(h).matrix, &xm), h, keep, 1))?;
    let ginv = inverse(kind, g)?;
    let mut rep = CheckReport::new(
        "coefficient_bounds",
        "‖[D_A, a_h]‖ ≤ ‖[D_A⊗1, x]‖ and ‖a_h‖ ≤ ℓ(hg)⁻¹ ‖[1⊗M_ℓ, x]‖ for x = Σ a_h λ_{hg}",
    )
    .param("radius", json!(h.radius()))
    .param("g", json!(g.to_string()));
    rep.detail("dirac_commutator_norm", da_norm);
    rep.detail("length_commutator_norm", ml_norm);
    let smax = |m: &CMatrix| m.clone().svd(false, false).singular_values.max();
    for (k, a) in x.terms() {
        let hh = kind.multiply_unchecked(k, &ginv);
        rep.slack(&format!("dirac_slack[{hh}]"), da_norm - smax(&commutator(d_a, a)));
        let lk = spec.length(k)?;
        if *k != kind.identity() && lk > 0.0 {
            rep.slack(&format!("length_slack[{hh}]"), ml_norm / lk - smax(a));
        }
    }
    Ok(rep.finish())
}

// ---------------------------------------------------------------------------
// default suite

fn z(rank: usize) -> LengthFunction {
    LengthFunction::word(GroupSpec::standard(GroupKind::FreeAbelian { rank }))
}

fn random_subset<R: Rng>(rng: &mut R, pool: &[GroupElement], max: usize) -> Vec<GroupElement> {
    let k = rng.gen_range(1..=max.min(pool.len()));
    let mut v: Vec<GroupElement> = pool.choose_multiple(rng, k).cloned().collect();
    v.sort();
    v
}

/// Random element with support drawn from `B_r`.
pub fn random_element<R: Rng>(
    rng: &mut R,
    spec: &LengthFunction,
    d: usize,
    r: f64,
    max_terms: usize,
) -> Result<CrossedElement> {
    let ball = spec.ball(r)?;
    let support = random_subset(rng, ball.elements(), max_terms);
    CrossedElement::from_terms(d, support.into_iter().map(|g| (g, random::matrix(rng, d, d))))
}

/// An action of `Z^m` by commuting random unitaries.
pub fn random_abelian_action<R: Rng>(rng: &mut R, rank: usize, d: usize) -> Result<ActionSpec> {
    let w = random::unitary(rng, d);
    let us = (0..rank)
        .map(|_| {
            let phases = nalgebra::DVector::from_fn(d, |_, _| {
                num_complex::Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
            });
            &w * CMatrix::from_diagonal(&phases) * w.adjoint()
        })
        .collect();
    ActionSpec::new(GroupKind::FreeAbelian { rank }, us)
}

fn params(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Overrides of the default suite parameters; only the checks over a single
/// word-metric group accept them.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SuiteOverrides {
    pub group: Option<GroupKind>,
    pub radius: Option<f64>,
}

impl SuiteOverrides {
    pub fn is_empty(&self) -> bool {
        self.group.is_none() && self.radius.is_none()
    }
}

fn action_for<R: Rng>(rng: &mut R, kind: GroupKind, d: usize) -> Result<ActionSpec> {
    match kind {
        GroupKind::FreeAbelian { rank } => random_abelian_action(rng, rank, d),
        k => Ok(ActionSpec::trivial(k, d)),
    }
}

pub fn suite_commutator_identity(rng: &mut ChaCha8Rng, o: &SuiteOverrides) -> Result<CheckReport> {
    let mut reports = Vec::new();
    for i in 0..20 {
        let kind = o.group.unwrap_or(GroupKind::FreeAbelian { rank: 1 + i % 2 });
        let d = 1 + i % 3;
        let radius = o.radius.unwrap_or(if kind.abelianization_rank() == 1 { 8.0 } else { 6.0 });
        let spec = LengthFunction::word(GroupSpec::standard(kind));
        let action = action_for(rng, kind, d)?;
        let x = random_element(rng, &spec, d, 2.0_f64.min(radius - 1.0), 4)?;
        let h = TruncatedHilbert::new(&spec, d, radius)?;
        reports.push(check_commutator_identity(&x, &h, &action)?);
    }
    let groups = match o.group {
        Some(k) => json!([k.to_string()]),
        None => json!(["Z", "Z^2"]),
    };
    Ok(CheckReport::aggregate(
        CHECKS[0],
        &reports[0].anchor.clone(),
        params(&[("groups", groups), ("d", json!([1, 2, 3])), ("instances", json!(20))]),
        reports,
    ))
}

pub fn suite_cocycle(rng: &mut ChaCha8Rng, o: &SuiteOverrides) -> Result<CheckReport> {
    let h3 = GroupKind::Heisenberg3;
    let cases: Vec<(GroupKind, f64)> = match o.group {
        Some(k) => vec![(k, o.radius.unwrap_or(if k == h3 { 8.0 } else { 10.0 }))],
        None => {
            let r = o.radius;
            vec![(GroupKind::FreeAbelian { rank: 2 }, r.unwrap_or(10.0)), (h3, r.unwrap_or(8.0))]
        }
    };
    let mut reports = Vec::new();
    let mut labels = Vec::new();
    for (kind, radius) in cases {
        let spec = LengthFunction::word(GroupSpec::standard(kind));
        let pool_radius = (if kind == h3 { 2.0f64 } else { 4.0 }).min(radius);
        let pool = spec.ball(pool_radius)?.elements().to_vec();
        let pairs: Vec<_> =
            (0..100).map(|_| (pool.choose(rng).unwrap().clone(), pool.choose(rng).unwrap().clone())).collect();
        reports.push(check_cocycle(&spec, &pairs, radius)?);
        labels.push(format!("{kind} r={radius}"));
    }
    let anchor = reports[0].anchor.clone();
    let mut out = CheckReport::aggregate(
        CHECKS[1],
        &anchor,
        params(&[("groups", json!(labels)), ("pairs", json!(100))]),
        reports,
    );
    out.residual_tolerance = 0.0;
    Ok(out.finish())
}

pub fn suite_conditional_expectation(rng: &mut ChaCha8Rng) -> Result<CheckReport> {
    let mut reports = Vec::new();
    for i in 0..20 {
        let d = 2;
        let (spec, sub, radius, support_r, g_r) = if i % 2 == 0 {
            (z(1), Subgroup::Multiples(2), 9.0, 3.0, 2.0)
        } else {
            (z(2), Subgroup::Kernel(vec![1, 0]), 6.0, 2.0, 1.0)
        };
        let rank = spec.group().kind.abelianization_rank();
        let action = random_abelian_action(rng, rank, d)?;
        let x = random_element(rng, &spec, d, support_r, 4)?;
        let g = spec.ball(g_r)?.elements().choose(rng).unwrap().clone();
        let d_a = random::hermitian(rng, d);
        let h = TruncatedHilbert::new(&spec, d, radius)?;
        reports.push(check_conditional_expectation(&x, &g, &sub, &d_a, &h, &action)?);
    }
    let anchor = reports[0].anchor.clone();
    Ok(CheckReport::aggregate(
        CHECKS[2],
        &anchor,
        params(&[("subgroups", json!(["2Z in Z", "ker p1 in Z^2"])), ("instances", json!(20))]),
        reports,
    ))
}

pub fn suite_tail_bound(rng: &mut ChaCha8Rng) -> Result<CheckReport> {
    let spec = z(2);
    let sigmas = facets(spec.group())?;
    let near = spec.ball(1.0)?.elements().to_vec();
    let homs: [[i64; 2]; 4] = [[1, 0], [0, 1], [1, 1], [1, -1]];
    let mut reports = Vec::new();
    for i in 0..50 {
        let d = 1 + i % 2;
        let action = random_abelian_action(rng, 2, d)?;
        let x = random_element(rng, &spec, d, 4.0, 5)?;
        let phi = homs.choose(rng).unwrap();
        let n = rng.gen_range(1..=3u64);
        // boundary value of φ_g for a nearby g: the mean of φ_g under a facet functional
        let l = if i % 2 == 0 {
            0.0
        } else {
            let g0 = near.choose(rng).unwrap();
            functional_value(sigmas.choose(rng).unwrap(), spec.group().kind, g0)?
        };
        reports.push(check_tail_bound(&x, &spec, &action, phi, l, n, 4.0, 4.0)?);
    }
    let anchor = reports[0].anchor.clone();
    let mut out = CheckReport::aggregate(
        CHECKS[3],
        &anchor,
        params(&[
            ("group", json!("Z^2")),
            ("support_radius", json!(4)),
            ("N", json!([1, 2, 3])),
            ("instances", json!(50)),
        ]),
        reports,
    );
    out.detail("factor_n1_l0", tail_bound_factor(1, 0.0)?);
    Ok(out)
}

pub fn suite_isomorphism_unitary(rng: &mut ChaCha8Rng) -> Result<CheckReport> {
    let spec = z(1);
    let d = 2;
    let h = TruncatedHilbert::new(&spec, d, 4.0)?;
    let one = GroupElement::Lattice(vec![1]);
    let f = phi_values(&h, &one)?;
    let mut reports = Vec::new();
    for _ in 0..10 {
        let action = ActionSpec::new(GroupKind::FreeAbelian { rank: 1 }, vec![random::unitary(rng, d)])?;
        let a = random::matrix(rng, d, d);
        let g = GroupElement::Lattice(vec![rng.gen_range(-2..=2)]);
        reports.push(check_isomorphism_unitary(&a, &f, &g, &h, &action)?);
    }
    let anchor = reports[0].anchor.clone();
    Ok(CheckReport::aggregate(
        CHECKS[4],
        &anchor,
        params(&[("group", json!("Z")), ("radius", json!(4)), ("d", json!(2)), ("instances", json!(10))]),
        reports,
    ))
}

pub fn suite_equicontinuity_nctorus(_rng: &mut ChaCha8Rng) -> Result<CheckReport> {
    let qs = [3usize, 5, 8];
    let reports: Vec<CheckReport> = qs
        .par_iter()
        .map(|&q| {
            let angle = Angle::new(1, q)?;
            let u = clock(angle);
            let x = CrossedElement::from_terms(
                q,
                [(GroupElement::Lattice(vec![1]), u.clone()), (GroupElement::Lattice(vec![-1]), u.adjoint())],
            )?;
            check_equicontinuity_nctorus(angle, &x, -50..=50, 20.0)
        })
        .collect::<Result<_>>()?;
    let anchor = reports[0].anchor.clone();
    Ok(CheckReport::aggregate(
        CHECKS[5],
        &anchor,
        params(&[
            ("q", json!(qs)),
            ("n_range", json!([-50, 50])),
            ("radius", json!(20)),
            ("element", json!("uλ₁ + u*λ₋₁")),
        ]),
        reports,
    ))
}

pub fn suite_af_triple(rng: &mut ChaCha8Rng) -> Result<CheckReport> {
    check_af_triple(&[2; 5], &[1.0, 2.0, 4.0, 8.0, 16.0], 3, rng.gen())
}

pub fn suite_coefficient_bounds(rng: &mut ChaCha8Rng) -> Result<CheckReport> {
    let mut reports = Vec::new();
    for i in 0..10 {
        let rank = 1 + i % 2;
        let d = 2;
        let spec = z(rank);
        let action = random_abelian_action(rng, rank, d)?;
        let x = random_element(rng, &spec, d, 2.0, 4)?;
        let g = spec.ball(1.0)?.elements().choose(rng).unwrap().clone();
        let d_a = random::hermitian(rng, d);
        let h = TruncatedHilbert::new(&spec, d, 5.0)?;
        reports.push(check_coefficient_bounds(&x, &g, &d_a, &h, &action)?);
    }
    let anchor = reports[0].anchor.clone();
    Ok(CheckReport::aggregate(
        CHECKS[7],
        &anchor,
        params(&[("groups", json!(["Z", "Z^2"])), ("radius", json!(5)), ("instances", json!(10))]),
        reports,
    ))
}

/// One check of the default suite; the generator is seeded from `seed` on a
/// stream private to the check.
pub fn run_check(name: &str, seed: u64) -> Result<CheckReport> {
    run_check_with(name, seed, &SuiteOverrides::default())
}

pub fn run_check_with(name: &str, seed: u64, overrides: &SuiteOverrides) -> Result<CheckReport> {
    let index = CHECKS
        .iter()
        .position(|c| *c == name)
        .ok_or_else(|| Error::Parse(format!("unknown check '{name}'; known: {}", CHECKS.join(", "))))?;
    if index > 1 && !overrides.is_empty() {
        return Err(Error::Precondition(format!("check '{name}' takes no group or radius override")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    let mut rep = match index {
        0 => suite_commutator_identity(&mut rng, overrides),
        1 => suite_cocycle(&mut rng, overrides),
        2 => suite_conditional_expectation(&mut rng),
        3 => suite_tail_bound(&mut rng),
        4 => suite_isomorphism_unitary(&mut rng),
        5 => suite_equicontinuity_nctorus(&mut rng),
        6 => suite_af_triple(&mut rng),
        _ => suite_coefficient_bounds(&mut rng),
    }?;
    rep.parameters.insert("seed".into(), json!(seed));
    Ok(rep)
}

/// The full default suite, in [`CHECKS`] order.
pub fn run_all(seed: u64) -> Result<Vec<CheckReport>> {
    CHECKS.par_iter().map(|name| run_check(name, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(v: &[i64]) -> GroupElement {
        GroupElement::Lattice(v.to_vec())
    }

    #[test]
    fn commutator_identity_examples() {
        let spec = z(1);
        let h = TruncatedHilbert::new(&spec, 1, 8.0).unwrap();
        let act = ActionSpec::trivial(GroupKind::FreeAbelian { rank: 1 }, 1);
        let x = CrossedElement::from_terms(1, [(lat(&[1]), CMatrix::identity(1, 1))]).unwrap();
        let r = check_commutator_identity(&x, &h, &act).unwrap();
        assert!(r.pass);
        assert_eq!(r.residual, Some(0.0));
        let r0 = check_commutator_identity(&CrossedElement::zero(1), &h, &act).unwrap();
        assert_eq!(r0.residual, Some(0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec2 = z(2);
        let h2 = TruncatedHilbert::new(&spec2, 2, 6.0).unwrap();
        let act2 = random_abelian_action(&mut rng, 2, 2).unwrap();
        let x2 = CrossedElement::from_terms(
            2,
            [(lat(&[1, 1]), random::matrix(&mut rng, 2, 2)), (lat(&[-1, 0]), random::matrix(&mut rng, 2, 2))],
        )
        .unwrap();
        let r2 = check_commutator_identity(&x2, &h2, &act2).unwrap();
        assert!(r2.pass && r2.residual.unwrap() < 1e-12);
    }

    #[test]
    fn cocycle_trivial_pair() {
        let spec = z(2);
        let e = lat(&[0, 0]);
        let r = check_cocycle(&spec, &[(e.clone(), e)], 3.0).unwrap();
        assert_eq!(r.residual, Some(0.0));
        assert!(r.pass);
    }

    #[test]
    fn conditional_expectation_trivial_cases() {
        let spec = z(1);
        let h = TruncatedHilbert::new(&spec, 2, 8.0).unwrap();
        let act = ActionSpec::trivial(GroupKind::FreeAbelian { rank: 1 }, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = CrossedElement::from_terms(2, (0..4).map(|k| (lat(&[k]), random::matrix(&mut rng, 2, 2)))).unwrap();
        let d_a = random::hermitian(&mut rng, 2);
        let whole = check_conditional_expectation(&x, &lat(&[0]), &Subgroup::Whole, &d_a, &h, &act).unwrap();
        assert!(whole.pass);
        assert_eq!(whole.details["contractivity_slack"], 0.0);
        let even = check_conditional_expectation(&x, &lat(&[1]), &Subgroup::Multiples(2), &d_a, &h, &act).unwrap();
        assert!(even.pass, "{even:?}");
    }

    #[test]
    fn tail_bound_factor_and_shift_example() {
        let oracle = (2.0 * (std::f64::consts::PI.powi(2) / 6.0 - 1.0)).sqrt();
        assert!((tail_bound_factor(1, 0.0).unwrap() - oracle).abs() < 1e-12);
        assert!(tail_bound_factor(1, 2.0).is_err());
        let spec = z(1);
        let act = ActionSpec::trivial(GroupKind::FreeAbelian { rank: 1 }, 1);
        let x = CrossedElement::from_terms(1, [(lat(&[2]), CMatrix::identity(1, 1))]).unwrap();
        let r = check_tail_bound(&x, &spec, &act, &[1], 0.0, 1, 4.0, 4.0).unwrap();
        assert!((r.details["lhs"] - 1.0).abs() < 1e-12);
        assert!((r.details["rhs"] - 2.0).abs() < 1e-12);
        assert!((r.slack.unwrap() - (2.0 * oracle - 1.0)).abs() < 1e-9);
        // support inside {|φ| ≤ N}
        let small = CrossedElement::from_terms(1, [(lat(&[1]), CMatrix::identity(1, 1))]).unwrap();
        let r = check_tail_bound(&small, &spec, &act, &[1], 0.0, 1, 4.0, 4.0).unwrap();
        assert_eq!(r.details["lhs"], 0.0);
        assert!(r.pass);
    }

    #[test]
    fn isomorphism_identity_coefficient() {
        let spec = z(1);
        let h = TruncatedHilbert::new(&spec, 2, 4.0).unwrap();
        let act = ActionSpec::trivial(GroupKind::FreeAbelian { rank: 1 }, 2);
        let f = vec![0.0; h.ball().len()];
        let r = check_isomorphism_unitary(&CMatrix::identity(2, 2), &f, &lat(&[0]), &h, &act).unwrap();
        assert!(r.pass);
        assert_eq!(r.details["pi_residual"], 0.0);
        assert_eq!(r.details["lambda_residual"], 0.0);
    }

    #[test]
    fn coefficient_bounds_examples() {
        let spec = z(1);
        let h = TruncatedHilbert::new(&spec, 2, 4.0).unwrap();
        let act = ActionSpec::trivial(GroupKind::FreeAbelian { rank: 1 }, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random::matrix(&mut rng, 2, 2);
        let x = CrossedElement::from_terms(2, [(lat(&[1]), a.clone())]).unwrap();
        let zero = CMatrix::zeros(2, 2);
        let r = check_coefficient_bounds(&x, &lat(&[0]), &zero, &h, &act).unwrap();
        assert!(r.pass);
        assert_eq!(r.details["dirac_commutator_norm"], 0.0);
        // ‖[M_ℓ, aλ₁]‖ = ‖a‖ exactly, so the slack is at rounding level
        assert!(r.details["length_slack[(1)]"].abs() < 1e-9);
        let x0 = CrossedElement::from_terms(2, [(lat(&[0]), a)]).unwrap();
        let r0 = check_coefficient_bounds(&x0, &lat(&[0]), &random::hermitian(&mut rng, 2), &h, &act).unwrap();
        assert!(r0.details.keys().all(|k| !k.starts_with("length_slack")));
        assert!(r0.pass);
    }

    #[test]
    fn unknown_check_rejected() {
        assert!(run_check("nope", 0).is_err());
    }
}
