use std::collections::BTreeMap;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde_json::{json, Map, Value};

use horocp::group::{heisenberg, LengthFormula, DEFAULT_BALL_CAP};
use horocp::horoboundary::{self, Direction, RaySpec, SupportFunctional};
use horocp::nctorus::{self, Angle};
use horocp::operator::CrossedElement;
use horocp::quantum_metric::{self, FiniteTriple, MkOptions, StateSpec};
use horocp::separation::{self, WitnessKind};
use horocp::verify::{self, CheckReport, SuiteOverrides};
use horocp::{stable_norm, Error, GroupElement, GroupKind, GroupSpec, LengthFunction, NormSpec, Result};

use crate::{GroupArgs, Outcome};

fn outcome(inputs: Value, result: Value) -> Outcome {
    Outcome { inputs, result, diagnostics: Map::new(), failed: false, summary: "ok".into() }
}

fn group_inputs(g: &GroupArgs, cap: usize) -> Value {
    json!({
        "group": g.group,
        "gens": g.gens,
        "length": g.length,
        "scale": g.scale.clone().unwrap_or_else(|| "1".into()),
        "cap": cap,
    })
}

/// Flag, then `HOROCP_CAP`, then the library default.
fn resolve_cap(flag: Option<usize>) -> Result<usize> {
    if let Some(c) = flag {
        return Ok(c);
    }
    match std::env::var("HOROCP_CAP") {
        Ok(v) => {
            v.trim().parse().map_err(|_| Error::Parse(format!("HOROCP_CAP must be a positive integer, got {v:?}")))
        }
        Err(_) => Ok(DEFAULT_BALL_CAP),
    }
}

fn parse_generators(kind: GroupKind, gens: &str) -> Result<GroupSpec> {
    if gens.contains('|') || gens.starts_with('(') || gens.starts_with('[') {
        let elements = gens.split('|').map(|s| parse_element(kind, s)).collect::<Result<Vec<_>>>()?;
        // the inverses are implied
        let mut all = elements.clone();
        for g in &elements {
            all.push(kind.inverse(g)?);
        }
        GroupSpec::new(kind, all)
    } else {
        GroupSpec::named(kind, gens)
    }
}

/// Coordinates, or the letters `a`, `b`, `c` and their inverses on H3.
fn parse_element(kind: GroupKind, s: &str) -> Result<GroupElement> {
    let s = s.trim();
    if kind == GroupKind::Heisenberg3 {
        let letter = match s {
            "a" => Some(heisenberg::a()),
            "b" => Some(heisenberg::b()),
            "c" => Some(heisenberg::c()),
            "A" => Some(kind.inverse(&heisenberg::a())?),
            "B" => Some(kind.inverse(&heisenberg::b())?),
            "C" => Some(kind.inverse(&heisenberg::c())?),
            _ => None,
        };
        if let Some(g) = letter {
            return Ok(g);
        }
    }
    kind.parse_element(s)
}

fn parse_rational(s: &str) -> Result<Rational64> {
    Rational64::from_str(s.trim()).map_err(|_| Error::Parse(format!("expected a rational p/q, got {s:?}")))
}

fn build_length(g: &GroupArgs) -> Result<(LengthFunction, usize)> {
    let kind: GroupKind = g.group.parse()?;
    let cap = resolve_cap(g.cap)?;
    let norm_rank = || match kind {
        GroupKind::FreeAbelian { rank } => Ok(rank),
        k => Err(Error::Precondition(format!("norm lengths live on Z^m, got {k}"))),
    };
    let l = match g.length.as_str() {
        "word" => LengthFunction::word(parse_generators(kind, &g.gens)?),
        "l1" => LengthFunction::norm(norm_rank()?, NormSpec::L1)?,
        "l2" => LengthFunction::norm(norm_rank()?, NormSpec::L2)?,
        "linf" => LengthFunction::norm(norm_rank()?, NormSpec::LInf)?,
        "central-sqrt" => {
            if kind != (GroupKind::FreeAbelian { rank: 1 }) {
                return Err(Error::Precondition("central-sqrt is a length on Z".into()));
            }
            LengthFunction::formula(LengthFormula::CentralSqrt)
        }
        other => return Err(Error::Parse(format!("unknown length {other:?}"))),
    };
    let l = match &g.scale {
        Some(s) => l.scaled(parse_rational(s)?)?,
        None => l,
    };
    Ok((l.with_cap(cap), cap))
}

/// The affine hull of the facet, `σ·x = σ(s)` for any generator `s` on it.
fn facet_plane(f: &SupportFunctional) -> String {
    let lhs = horocp::polytope::format_hyperplane(&f.coefficients);
    let value = match f.facet.first() {
        Some(GroupElement::Lattice(v)) | Some(GroupElement::LatticeTorsion(v, _)) => f.evaluate(v).to_string(),
        Some(GroupElement::Heisenberg([x, y, _])) => f.evaluate(&[*x, *y]).to_string(),
        _ => "1".into(),
    };
    format!("{} = {value}", lhs.strip_suffix(" = 0").unwrap_or(&lhs))
}

fn functional_json(f: &SupportFunctional) -> Value {
    json!({
        "coefficients": f.coefficients.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
        "facet": f.facet.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
        "hyperplane": facet_plane(f),
    })
}

pub fn group_ball(g: &GroupArgs, radius: f64, list: bool) -> Result<Outcome> {
    let (l, cap) = build_length(g)?;
    let ball = l.ball(radius)?;
    let mut spheres: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (_, len) in ball.iter() {
        spheres.entry(format!("{len:020.9}")).or_insert((len, 0)).1 += 1;
    }
    let spheres: Vec<Value> = spheres.values().map(|(r, n)| json!({"length": r, "count": n})).collect();
    let mut result = json!({
        "anchor": "B_R = {g : ℓ(g) ≤ R}",
        "radius": radius,
        "size": ball.len(),
        "covers_group": ball.covers_group,
        "spheres": spheres,
    });
    if list {
        result["elements"] = ball.iter().map(|(e, len)| json!({"element": e.to_string(), "length": len})).collect();
    }
    let mut inputs = group_inputs(g, cap);
    inputs["radius"] = json!(radius);
    inputs["list"] = json!(list);
    let mut o = outcome(inputs, result);
    o.summary = format!("{} elements", ball.len());
    Ok(o)
}

pub fn phi(g: &GroupArgs, elem: &str, radius: f64) -> Result<Outcome> {
    let (l, cap) = build_length(g)?;
    let kind = l.group().kind;
    let x = parse_element(kind, elem)?;
    let ball = l.ball(radius)?;
    let f = horoboundary::phi(&x, &ball, &l)?;
    let values: Vec<Value> =
        ball.elements().iter().zip(&f.values).map(|(h, v)| json!({"h": h.to_string(), "value": v})).collect();
    let mut inputs = group_inputs(g, cap);
    inputs["g"] = json!(elem);
    inputs["radius"] = json!(radius);
    let result = json!({
        "anchor": "φ_g(h) = ℓ(h) − ℓ(g⁻¹h)",
        "g": x.to_string(),
        "length_g": l.length(&x)?,
        "max_abs": f.max_abs(),
        "values": values,
    });
    Ok(outcome(inputs, result))
}

pub fn facets(g: &GroupArgs) -> Result<Outcome> {
    let (l, cap) = build_length(g)?;
    if !l.is_word() {
        return Err(Error::Precondition("facets are defined for word lengths".into()));
    }
    let fs: Vec<SupportFunctional> = horoboundary::facets(l.group())?.iter().map(|f| f.scaled(l.scale())).collect();
    let result = json!({
        "anchor": "σ_F = 1 on the facet F of conv(p_G(S)), σ_F ≤ 1 on p_G(S)",
        "count": fs.len(),
        "facets": fs.iter().map(functional_json).collect::<Vec<_>>(),
    });
    let mut o = outcome(group_inputs(g, cap), result);
    o.summary = format!("{} facets", fs.len());
    Ok(o)
}

fn parse_direction(s: &str) -> Result<Direction> {
    let parts: Vec<&str> = s.trim().trim_matches(['(', ')']).split(',').map(str::trim).collect();
    if let Ok(q) = parts.iter().map(|p| parse_rational(p)).collect::<Result<Vec<_>>>() {
        return Ok(Direction::Rational(q));
    }
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| Error::Parse(format!("bad direction component {p:?}"))))
        .collect::<Result<Vec<_>>>()
        .map(Direction::Real)
}

pub fn busemann(
    g: &GroupArgs,
    direction: Option<&str>,
    word: Option<&str>,
    steps: usize,
    elem: &str,
    horizon: f64,
) -> Result<Outcome> {
    let (l, cap) = build_length(g)?;
    let kind = l.group().kind;
    let x = parse_element(kind, elem)?;
    let mut inputs = group_inputs(g, cap);
    inputs["g"] = json!(elem);
    inputs["steps"] = json!(steps);
    inputs["horizon"] = json!(horizon);
    let ray = match (direction, word) {
        (Some(d), None) => {
            inputs["direction"] = json!(d);
            RaySpec::lattice(l.group().clone(), parse_direction(d)?, steps)
        }
        (None, Some(w)) => {
            inputs["word"] = json!(w);
            let letters = w.split('|').map(|s| parse_element(kind, s)).collect::<Result<Vec<_>>>()?;
            RaySpec::word(l.group().clone(), letters, steps)
        }
        _ => return Err(Error::Parse("give exactly one of --direction or --word".into())),
    };
    let est = horoboundary::busemann_along_ray(&ray, &l, &x)?;
    let geo = horoboundary::check_ray_geodesic(&ray, &l, horizon)?;
    let mut result = json!({
        "anchor": "ξ(g) = lim_t [ℓ(γ(t)) − ℓ(g⁻¹γ(t))]",
        "g": x.to_string(),
        "value": est.value,
        "tail_variation": est.tail_variation,
        "samples": est.samples,
        "geodesic": {"horizon": geo.horizon, "max_defect": geo.max_defect, "pairs": geo.pairs},
    });
    // For an integer direction in the relative interior of a facet, the
    // limit is the facet functional.
    if let (Some(Direction::Rational(q)), true) = (direction.map(parse_direction).transpose()?, l.is_word()) {
        if q.iter().all(|r| r.is_integer()) && kind.abelianization_rank() == q.len() {
            let v: Vec<i64> = q.iter().map(|r| r.to_integer()).collect();
            let fs: Vec<SupportFunctional> =
                horoboundary::facets(l.group())?.iter().map(|f| f.scaled(l.scale())).collect();
            if let Some(f) = horoboundary::facet_of_direction(&fs, &v) {
                let predicted = horoboundary::functional_value(f, kind, &x)?;
                result["facet"] = functional_json(f);
                result["facet_value"] = json!(predicted);
                result["facet_residual"] = json!((predicted - est.value).abs());
            }
        }
    }
    let mut o = outcome(inputs, result);
    o.summary = format!("value {}", est.value);
    Ok(o)
}

pub fn stable_norm(g: &GroupArgs, elem: &str, horizon: u64) -> Result<Outcome> {
    let (l, cap) = build_length(g)?;
    let kind = l.group().kind;
    let x = parse_element(kind, elem)?;
    let r = stable_norm::asymptotic_length(&x, &l, horizon)?;
    let mut result = json!({
        "anchor": "‖g‖_st = lim_i ℓ(g^i)/i = inf_i ℓ(g^i)/i",
        "g": x.to_string(),
        "value": r.value,
        "fekete_gap": r.fekete_gap,
        "horizon": r.horizon,
        "length": r.length,
    });
    if l.is_word() && kind.is_abelian() && kind.abelianization_rank() > 0 {
        let fs: Vec<SupportFunctional> = horoboundary::facets(l.group())?.iter().map(|f| f.scaled(l.scale())).collect();
        let dual = stable_norm::stable_norm_dual_int(&kind.abelianize(&x)?, &fs)?;
        let dual_f = dual.to_f64().unwrap_or(f64::NAN);
        result["dual_norm"] = json!(dual.to_string());
        result["dual_norm_value"] = json!(dual_f);
        result["dual_residual"] = json!((r.value - dual_f).abs());
    }
    let mut inputs = group_inputs(g, cap);
    inputs["g"] = json!(elem);
    inputs["horizon"] = json!(horizon);
    let mut o = outcome(inputs, result);
    o.summary = format!("value {}", r.value);
    Ok(o)
}

pub fn separate(g: &GroupArgs) -> Result<Outcome> {
    let (l, cap) = build_length(g)?;
    let c = separation::separation_certificate(&l)?;
    let mut result = json!({
        "anchor": "separated ⇔ span{σ_F} = Hom(G_ab, R)",
        "separated": c.separated,
        "rank": c.rank,
        "abelianization_rank": c.abelianization_rank,
        "witness_kind": match c.witness_kind {
            WitnessKind::FacetSpan => "facet_span",
            WitnessKind::SublinearityFailure => "sublinearity_failure",
        },
        "functionals": c.functionals.iter().map(functional_json).collect::<Vec<_>>(),
        "invertible_minor": c.invertible_minor.as_ref().map(|m| json!({"rows": m.rows, "columns": m.columns})),
    });
    if let Some(s) = &c.sublinearity {
        result["sublinearity"] = json!({
            "g": s.g.to_string(),
            "horizon": s.horizon,
            "ratio": s.ratio,
            "fekete_bound": s.fekete_bound,
            "checkpoints": s.checkpoints.iter().map(|(i, v)| json!([i, v])).collect::<Vec<_>>(),
            "decreasing": s.decreasing,
            "vanishing": s.vanishing,
        });
    }
    let mut o = outcome(group_inputs(g, cap), result);
    o.summary = format!("separated={} rank={}", c.separated, c.rank);
    Ok(o)
}

fn report_line(r: &CheckReport) -> String {
    format!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.name)
}

pub fn verify(check: &str, seed: u64, group: Option<&str>, radius: Option<f64>) -> Result<Outcome> {
    let overrides = SuiteOverrides { group: group.map(str::parse).transpose()?, radius };
    let inputs = json!({"check": check, "seed": seed, "group": group, "radius": radius});
    let reports = if check == "all" {
        if !overrides.is_empty() {
            return Err(Error::Precondition("verify all takes no group or radius override".into()));
        }
        verify::run_all(seed)?
    } else {
        vec![verify::run_check_with(check, seed, &overrides)?]
    };
    let pass = reports.iter().all(|r| r.pass);
    for r in &reports {
        eprintln!("{}", report_line(r));
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    let result = if check == "all" {
        json!({"pass": pass, "checks": serde_json::to_value(&reports).expect("reports serialize")})
    } else {
        serde_json::to_value(&reports[0]).expect("report serializes")
    };
    let mut o = outcome(inputs, result);
    o.failed = !pass;
    o.summary = format!("{passed}/{} checks passed", reports.len());
    for r in reports.iter().filter(|r| !r.pass) {
        o.diagnostics.insert(r.name.clone(), json!(r.failures));
    }
    Ok(o)
}

pub fn nctorus(p: i64, q: usize, n_min: i64, n_max: i64, radius: f64) -> Result<Outcome> {
    if n_min > n_max {
        return Err(Error::Precondition("n-min exceeds n-max".into()));
    }
    let angle = Angle::new(p, q)?;
    let u = nctorus::clock(angle);
    let x = CrossedElement::from_terms(
        q,
        [(GroupElement::Lattice(vec![1]), u.clone()), (GroupElement::Lattice(vec![-1]), u.adjoint())],
    )?;
    let rep = verify::check_equicontinuity_nctorus(angle, &x, n_min..=n_max, radius)?;
    let inputs = json!({"p": p, "q": q, "n_min": n_min, "n_max": n_max, "radius": radius, "element": "uλ₁ + u*λ₋₁"});
    let mut o = outcome(inputs, serde_json::to_value(&rep).expect("report serializes"));
    o.failed = !rep.pass;
    o.summary = report_line(&rep);
    Ok(o)
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',').map(|t| t.trim().parse::<T>().map_err(|_| Error::Parse(format!("bad {what} entry {t:?}")))).collect()
}

pub fn af_triple(orders: &str, eigenvalues: Option<&str>, samples: usize, seed: u64) -> Result<Outcome> {
    let orders: Vec<usize> = parse_list(orders, "order")?;
    let eigenvalues: Vec<f64> = match eigenvalues {
        Some(e) => parse_list(e, "eigenvalue")?,
        None => (0..orders.len()).map(|i| 2f64.powi(i as i32)).collect(),
    };
    let rep = verify::check_af_triple(&orders, &eigenvalues, samples, seed)?;
    let inputs = json!({"orders": orders, "eigenvalues": eigenvalues, "samples": samples, "seed": seed});
    let mut o = outcome(inputs, serde_json::to_value(&rep).expect("report serializes"));
    o.failed = !rep.pass;
    o.summary = report_line(&rep);
    Ok(o)
}

pub struct MkArgs {
    pub order: usize,
    pub lengths: Option<String>,
    pub dirac_scale: f64,
    pub psi: String,
    pub psi2: String,
    pub restarts: usize,
    pub iterations: usize,
    pub step: f64,
    pub seed: u64,
    pub brute_force_grid: Option<usize>,
}

fn parse_state(s: &str, n: usize) -> Result<StateSpec> {
    let (kind, idx) =
        s.split_once(':').ok_or_else(|| Error::Parse(format!("state must be char:j or point:x, got {s:?}")))?;
    let i: usize = idx.trim().parse().map_err(|_| Error::Parse(format!("bad state index {idx:?}")))?;
    if i >= n {
        return Err(Error::Precondition(format!("state index {i} out of range for order {n}")));
    }
    match kind {
        "char" => Ok(StateSpec::Character(i)),
        "point" => {
            let mut v = vec![[0.0, 0.0]; n];
            v[i] = [1.0, 0.0];
            Ok(StateSpec::VectorState(v))
        }
        other => Err(Error::Parse(format!("unknown state kind {other:?}"))),
    }
}

pub fn mk_distance(a: MkArgs) -> Result<Outcome> {
    let lengths: Vec<f64> = match &a.lengths {
        Some(s) => parse_list(s, "length")?,
        None => (0..a.order).map(|k| k.min(a.order - k) as f64).collect(),
    };
    if lengths.len() != a.order {
        return Err(Error::Precondition(format!("need {} lengths, got {}", a.order, lengths.len())));
    }
    let triple = FiniteTriple::cyclic(&lengths)?;
    let triple = if a.dirac_scale == 1.0 { triple } else { triple.scaled(a.dirac_scale)? };
    let psi = parse_state(&a.psi, a.order)?;
    let psi2 = parse_state(&a.psi2, a.order)?;
    let opts = MkOptions { restarts: a.restarts, iterations: a.iterations, step: a.step, seed: a.seed };
    let r = quantum_metric::mk_distance(&triple, &psi, &psi2, &opts)?;
    let mut result = json!({
        "anchor": "d(ψ, ψ′) = sup{|ψ(a) − ψ′(a)| : ‖[D, a]‖ ≤ 1}",
        "distance": r.lower_bound,
        "converged": r.converged,
        "witness": r.witness,
        "witness_seminorm": r.witness_seminorm,
        "restarts": r.restarts,
    });
    if let Some(grid) = a.brute_force_grid {
        let b = quantum_metric::mk_brute_force(&triple, &psi, &psi2, grid)?;
        result["brute_force"] = json!(b);
        result["brute_force_residual"] = json!((b - r.lower_bound).abs());
    }
    let inputs = json!({
        "order": a.order,
        "lengths": lengths,
        "dirac_scale": a.dirac_scale,
        "psi": a.psi,
        "psi2": a.psi2,
        "restarts": a.restarts,
        "iterations": a.iterations,
        "step": a.step,
        "seed": a.seed,
        "brute_force_grid": a.brute_force_grid,
    });
    let mut o = outcome(inputs, result);
    if !r.converged {
        o.diagnostics.insert("warning".into(), json!("restarts did not agree; the distance is a lower bound"));
    }
    o.summary = format!("distance {}", r.lower_bound);
    Ok(o)
}
