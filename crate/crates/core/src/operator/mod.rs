//! Truncated operators on `H_A ⊗ ℓ²(B_R)`.
//!
//! Basis vectors `ξ_α ⊗ δ_h` are indexed `h·d + α`, with `h` running through
//! the ball order, so every group-diagonal operator is block diagonal.

mod expectation;
mod norm;
pub mod random;

pub use expectation::{coset_compression, Subgroup};
pub use norm::{dense_norm, op_norm, top_singular, DEFAULT_TOL, MAX_ITERATIONS, SVD_DIM};

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{BallTable, GroupElement, GroupKind, LengthFunction};
use crate::horoboundary::lengths_of;

pub type CMatrix = DMatrix<Complex64>;

/// Dense operators beyond this dimension are refused.
pub const DIM_CAP: usize = 20_000;
pub const UNITARY_TOL: f64 = 1e-12;

pub fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `max |t_ij − s_ij|`.
pub fn max_abs_diff(t: &CMatrix, s: &CMatrix) -> f64 {
    t.iter().zip(s.iter()).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
}

pub fn hermitian_defect(t: &CMatrix) -> f64 {
    max_abs_diff(t, &t.adjoint())
}

pub fn unitary_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u * u.adjoint()), &CMatrix::identity(n, n))
}

fn int_power(u: &CMatrix, k: i64) -> CMatrix {
    let n = u.nrows();
    let base = if k < 0 { u.adjoint() } else { u.clone() };
    let mut e = k.unsigned_abs();
    let mut acc = CMatrix::identity(n, n);
    let mut sq = base;
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &sq;
        }
        e >>= 1;
        if e > 0 {
            sq = &sq * &sq;
        }
    }
    acc
}

/// `H_A ⊗ ℓ²(B_R)`.
#[derive(Clone, Debug)]
pub struct TruncatedHilbert {
    d: usize,
    ball: Arc<BallTable>,
    spec: LengthFunction,
}

impl TruncatedHilbert {
    pub fn new(spec: &LengthFunction, d: usize, radius: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Precondition("coefficient dimension must be positive".into()));
        }
        let ball = spec.ball(radius)?;
        let dim = d * ball.len();
        if dim > DIM_CAP {
            return Err(Error::DimensionCap { dim, cap: DIM_CAP });
        }
        Ok(TruncatedHilbert { d, ball, spec: spec.clone() })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ball(&self) -> &Arc<BallTable> {
        &self.ball
    }

    pub fn spec(&self) -> &LengthFunction {
        &self.spec
    }

    pub fn kind(&self) -> GroupKind {
        self.spec.group().kind
    }

    pub fn radius(&self) -> f64 {
        self.ball.radius
    }

    pub fn dim(&self) -> usize {
        self.d * self.ball.len()
    }

    pub fn index(&self, h: usize, alpha: usize) -> usize {
        h * self.d + alpha
    }

    /// Indices of ball elements with `ℓ(h) ≤ r`.
    pub fn window(&self, r: f64) -> usize {
        if r < 0.0 {
            0
        } else {
            self.ball.prefix_within(r)
        }
    }

    /// Block-diagonal operator with block `f(h)` at `(h, h)`.
    pub fn block_diagonal(&self, mut f: impl FnMut(usize) -> CMatrix) -> CMatrix {
        let d = self.d;
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for h in 0..self.ball.len() {
            m.view_mut((h * d, h * d), (d, d)).copy_from(&f(h));
        }
        m
    }

    /// `1 ⊗ ν(f)` for a function on the ball.
    pub fn diagonal(&self, f: &[f64]) -> CMatrix {
        let d = self.d;
        CMatrix::from_diagonal(&nalgebra::DVector::from_fn(self.dim(), |i, _| c64(f[i / d])))
    }

    /// `T ⊗ 1`: the same block on every group coordinate.
    pub fn coefficient(&self, t: &CMatrix) -> CMatrix {
        self.block_diagonal(|_| t.clone())
    }
}

/// An action of the group on `M_d(C)` by conjugation with unitaries.
///
/// One unitary per canonical generator: `e_1..e_m` (plus the torsion
/// generator) for lattices, `a`, `b` for the Heisenberg group (the centre
/// acts through `W_c = W_a* W_b* W_a W_b`), and `1` for cyclic groups.
#[derive(Clone, Debug, Serialize)]
pub struct ActionSpec {
    #[serde(skip)]
    unitaries: Vec<CMatrix>,
    kind: GroupKind,
    d: usize,
    /// Unimodular scalars by which the relators hold.
    pub relator_scalars: Vec<(String, [f64; 2])>,
}

impl ActionSpec {
    pub fn trivial(kind: GroupKind, d: usize) -> Self {
        let n = Self::generator_count(kind);
        ActionSpec::new(kind, vec![CMatrix::identity(d, d); n]).expect("identities are consistent")
    }

    fn generator_count(kind: GroupKind) -> usize {
        match kind {
            GroupKind::FreeAbelian { rank } => rank,
            GroupKind::FreeAbelianTimesCyclic { rank, .. } => rank + 1,
            GroupKind::Heisenberg3 => 2,
            GroupKind::FiniteCyclic { .. } => 1,
        }
    }

    pub fn new(kind: GroupKind, unitaries: Vec<CMatrix>) -> Result<Self> {
        let n = Self::generator_count(kind);
        if unitaries.len() != n {
            return Err(Error::Precondition(format!("{kind} needs {n} generator unitaries, got {}", unitaries.len())));
        }
        let d = unitaries.first().map_or(1, |u| u.nrows());
        for u in &unitaries {
            if u.nrows() != d || u.ncols() != d {
                return Err(Error::Precondition("unitaries must be square of equal size".into()));
            }
            let r = unitary_defect(u);
            if r > UNITARY_TOL {
                return Err(Error::NotUnitary(r));
            }
        }
        let mut spec = ActionSpec { unitaries, kind, d, relator_scalars: Vec::new() };
        spec.check_relators()?;
        Ok(spec)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `x = λ·y` for a unimodular `λ`; returns `λ`.
    fn projective_ratio(x: &CMatrix, y: &CMatrix, name: &str) -> Result<Complex64> {
        let (i, _) = y.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).expect("non-empty");
        let lambda = x.as_slice()[i] / y.as_slice()[i];
        let residual = max_abs_diff(x, &(y * lambda)).max((lambda.norm() - 1.0).abs());
        if residual > 1e-10 {
            return Err(Error::InconsistentAction { relator: name.to_string(), residual });
        }
        Ok(lambda)
    }

    fn check_relators(&mut self) -> Result<()> {
        let mut rels: Vec<(String, CMatrix, CMatrix)> = Vec::new();
        let w = &self.unitaries;
        let d = self.d;
        let id = CMatrix::identity(d, d);
        match self.kind {
            GroupKind::FreeAbelian { rank } | GroupKind::FreeAbelianTimesCyclic { rank, .. } => {
                let n = w.len();
                for i in 0..n {
                    for j in i + 1..n {
                        rels.push((format!("[g{},g{}]", i + 1, j + 1), &w[i] * &w[j], &w[j] * &w[i]));
                    }
                }
                if let GroupKind::FreeAbelianTimesCyclic { torsion, .. } = self.kind {
                    rels.push((format!("t^{torsion}"), int_power(&w[rank], torsion as i64), id));
                }
            }
            GroupKind::Heisenberg3 => {
                let c = self.center_unitary();
                rels.push(("[a,c]".into(), &w[0] * &c, &c * &w[0]));
                rels.push(("[b,c]".into(), &w[1] * &c, &c * &w[1]));
            }
            GroupKind::FiniteCyclic { order } => {
                rels.push((format!("g^{order}"), int_power(&w[0], order as i64), id));
            }
        }
        for (name, x, y) in rels {
            let l = Self::projective_ratio(&x, &y, &name)?;
            self.relator_scalars.push((name, [l.re, l.im]));
        }
        Ok(())
    }

    fn center_unitary(&self) -> CMatrix {
        let (a, b) = (&self.unitaries[0], &self.unitaries[1]);
        a.adjoint() * b.adjoint() * a * b
    }

    /// A unitary implementing `α_g`.
    pub fn unitary(&self, g: &GroupElement) -> Result<CMatrix> {
        if !self.kind.contains(g) {
            return Err(Error::GroupMismatch(format!("{g} is not an element of {}", self.kind)));
        }
        let w = &self.unitaries;
        let d = self.d;
        let mut acc = CMatrix::identity(d, d);
        match g {
            GroupElement::Lattice(v) => {
                for (u, &k) in w.iter().zip(v) {
                    acc *= int_power(u, k);
                }
            }
            GroupElement::LatticeTorsion(v, t) => {
                for (u, &k) in w.iter().zip(v) {
                    acc *= int_power(u, k);
                }
                acc *= int_power(&w[v.len()], *t as i64);
            }
            GroupElement::Heisenberg([x, y, z]) => {
                // (x, y, z) = a^x b^y c^{z − xy}
                acc = int_power(&w[0], *x) * int_power(&w[1], *y) * int_power(&self.center_unitary(), z - x * y);
            }
            GroupElement::Residue(r) => acc = int_power(&w[0], *r as i64),
        }
        Ok(acc)
    }

    /// `α_g(a) = W_g a W_g*`.
    pub fn act(&self, g: &GroupElement, a: &CMatrix) -> Result<CMatrix> {
        let u = self.unitary(g)?;
        Ok(&u * a * u.adjoint())
    }
}

/// A finitely supported `Σ a_g λ_g` with `d×d` coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossedElement {
    d: usize,
    terms: BTreeMap<GroupElement, CMatrix>,
}

impl CrossedElement {
    pub fn zero(d: usize) -> Self {
        CrossedElement { d, terms: BTreeMap::new() }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn from_terms(d: usize, terms: impl IntoIterator<Item = (GroupElement, CMatrix)>) -> Result<Self> {
        let mut x = CrossedElement::zero(d);
        for (g, a) in terms {
            x.add_term(g, a)?;
        }
        Ok(x)
    }

    /// Adds `a λ_g`; zero coefficients are dropped.
    pub fn add_term(&mut self, g: GroupElement, a: CMatrix) -> Result<()> {
        if a.nrows() != self.d || a.ncols() != self.d {
            return Err(Error::Precondition(format!(
                "coefficient is {}×{}, expected {}×{}",
                a.nrows(),
                a.ncols(),
                self.d,
                self.d
            )));
        }
        let entry = self.terms.entry(g.clone()).or_insert_with(|| CMatrix::zeros(self.d, self.d));
        *entry += a;
        if entry.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            self.terms.remove(&g);
        }
        Ok(())
    }

    pub fn terms(&self) -> &BTreeMap<GroupElement, CMatrix> {
        &self.terms
    }

    pub fn coefficient(&self, g: &GroupElement) -> Option<&CMatrix> {
        self.terms.get(g)
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.terms.keys()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support_radius(&self, spec: &LengthFunction) -> Result<f64> {
        self.terms.keys().try_fold(0.0f64, |m, g| Ok(m.max(spec.length(g)?)))
    }

    /// Keep only terms whose group element satisfies `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&GroupElement) -> bool) -> Self {
        CrossedElement {
            d: self.d,
            terms: self.terms.iter().filter(|(g, _)| keep(g)).map(|(g, a)| (g.clone(), a.clone())).collect(),
        }
    }

    /// `x*` = `Σ α_{g⁻¹}(a_g*) λ_{g⁻¹}`.
    pub fn adjoint(&self, kind: GroupKind, action: &ActionSpec) -> Result<Self> {
        let mut out = CrossedElement::zero(self.d);
        for (g, a) in &self.terms {
            let gi = kind.inverse(g)?;
            let c = action.act(&gi, &a.adjoint())?;
            out.add_term(gi, c)?;
        }
        Ok(out)
    }
}

/// A dense truncated operator with the construction that produced it.
#[derive(Clone, Debug)]
pub struct TruncatedOperator {
    pub matrix: CMatrix,
    pub tag: String,
    /// Columns `h` with `ℓ(h) ≤ window` agree with the untruncated operator.
    pub window: Option<f64>,
}

impl TruncatedOperator {
    pub fn new(matrix: CMatrix, tag: impl Into<String>, window: Option<f64>) -> Self {
        TruncatedOperator { matrix, tag: tag.into(), window }
    }

    pub fn is_hermitian(&self) -> bool {
        hermitian_defect(&self.matrix) < 1e-12
    }

    pub fn norm(&self, tol: f64) -> Result<f64> {
        op_norm(&self.matrix, tol)
    }
}

fn ball_product_index(h: &TruncatedHilbert, g: &GroupElement) -> Vec<Option<usize>> {
    let kind = h.kind();
    h.ball.elements().iter().map(|x| h.ball.index_of(&kind.multiply_unchecked(g, x))).collect()
}

/// Compression `P λ_g P`.
pub fn lambda(h: &TruncatedHilbert, g: &GroupElement) -> Result<TruncatedOperator> {
    let lg = h.spec.length(g)?;
    if lg > 2.0 * h.radius() {
        return Err(Error::EmptyCompression(format!("ℓ({g}) = {lg} exceeds twice the ball radius {}", h.radius())));
    }
    let d = h.d;
    let mut m = CMatrix::zeros(h.dim(), h.dim());
    for (col, row) in ball_product_index(h, g).into_iter().enumerate() {
        if let Some(row) = row {
            for a in 0..d {
                m[(row * d + a, col * d + a)] = c64(1.0);
            }
        }
    }
    Ok(TruncatedOperator::new(m, format!("lambda({g})"), Some(h.radius() - lg)))
}

/// `π̃(a)`: block `α_{h⁻¹}(a)` at `(h, h)`.
pub fn pi_tilde(h: &TruncatedHilbert, action: &ActionSpec, a: &CMatrix) -> Result<TruncatedOperator> {
    check_dims(h, action, a)?;
    let kind = h.kind();
    let blocks: Vec<CMatrix> =
        h.ball.elements().iter().map(|x| action.act(&kind.inverse_unchecked(x), a)).collect::<Result<_>>()?;
    Ok(TruncatedOperator::new(h.block_diagonal(|i| blocks[i].clone()), "pi_tilde", None))
}

fn check_dims(h: &TruncatedHilbert, action: &ActionSpec, a: &CMatrix) -> Result<()> {
    if action.d != h.d || a.nrows() != h.d || a.ncols() != h.d {
        return Err(Error::Precondition(format!(
            "dimension mismatch: space d={}, action d={}, coefficient {}×{}",
            h.d,
            action.d,
            a.nrows(),
            a.ncols()
        )));
    }
    if action.kind != h.kind() {
        return Err(Error::GroupMismatch(format!("action on {} used over {}", action.kind, h.kind())));
    }
    Ok(())
}

/// `1 ⊗ M_ℓ`.
pub fn m_ell(h: &TruncatedHilbert) -> TruncatedOperator {
    TruncatedOperator::new(h.diagonal(h.ball.lengths()), "m_ell", None)
}

/// `1 ⊗ M_φ` for the homomorphism `h ↦ φ·p_G(h)`.
pub fn m_phi(h: &TruncatedHilbert, phi: &[i64]) -> Result<TruncatedOperator> {
    let kind = h.kind();
    if phi.len() != kind.abelianization_rank() {
        return Err(Error::Precondition(format!(
            "homomorphism needs {} coefficients, got {}",
            kind.abelianization_rank(),
            phi.len()
        )));
    }
    let vals: Vec<f64> = h
        .ball
        .elements()
        .iter()
        .map(|x| {
            let p = kind.abelianize(x)?;
            Ok(p.iter().zip(phi).map(|(a, b)| (a * b) as f64).sum())
        })
        .collect::<Result<_>>()?;
    Ok(TruncatedOperator::new(h.diagonal(&vals), "m_phi", None))
}

/// `φ_g` on the ball.
pub fn phi_values(h: &TruncatedHilbert, g: &GroupElement) -> Result<Vec<f64>> {
    Ok(crate::horoboundary::phi(g, &h.ball, &h.spec)?.values)
}

/// `1 ⊗ M_{φ_g}`.
pub fn m_phi_g(h: &TruncatedHilbert, g: &GroupElement) -> Result<TruncatedOperator> {
    Ok(TruncatedOperator::new(h.diagonal(&phi_values(h, g)?), format!("m_phi_g({g})"), None))
}

/// `Σ_g π̃(a_g) P λ_g P`, with entry `(gh, h)` scaled by `weight(g, gh)`.
fn realize_weighted(
    x: &CrossedElement,
    h: &TruncatedHilbert,
    action: &ActionSpec,
    mut weight: impl FnMut(&GroupElement, usize) -> Result<f64>,
    tag: &str,
) -> Result<TruncatedOperator> {
    if x.d != h.d {
        return Err(Error::Precondition(format!("element has d={}, space has d={}", x.d, h.d)));
    }
    let r = x.support_radius(&h.spec)?;
    if r > h.radius() + 1e-12 {
        return Err(Error::SupportExceedsBall { support: r, ball: h.radius() });
    }
    let kind = h.kind();
    let d = h.d;
    let mut m = CMatrix::zeros(h.dim(), h.dim());
    for (g, a) in &x.terms {
        check_dims(h, action, a)?;
        for (col, row) in ball_product_index(h, g).into_iter().enumerate() {
            let Some(row) = row else { continue };
            let w = weight(g, row)?;
            if w == 0.0 {
                continue;
            }
            let block = action.act(&kind.inverse_unchecked(h.ball.element(row)), a)? * c64(w);
            let mut view = m.view_mut((row * d, col * d), (d, d));
            view += &block;
        }
    }
    Ok(TruncatedOperator::new(m, tag, Some(h.radius() - r)))
}

pub fn realize(x: &CrossedElement, h: &TruncatedHilbert, action: &ActionSpec) -> Result<TruncatedOperator> {
    realize_weighted(x, h, action, |_, _| Ok(1.0), "realize")
}

/// `Σ_g (1 ⊗ M_{φ_g}) π̃(a_g) λ_g`, the right-hand side of the commutator
/// identity `[1 ⊗ M_ℓ, x] = Σ φ_g a_g λ_g`.
pub fn realize_twisted(x: &CrossedElement, h: &TruncatedHilbert, action: &ActionSpec) -> Result<TruncatedOperator> {
    let mut cache: BTreeMap<GroupElement, Vec<f64>> = BTreeMap::new();
    realize_weighted(
        x,
        h,
        action,
        |g, row| {
            if !cache.contains_key(g) {
                cache.insert(g.clone(), phi_values(h, g)?);
            }
            Ok(cache[g][row])
        },
        "realize_twisted",
    )
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `x ⊕ x`.
pub fn double(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(x);
    m.view_mut((n, n), (n, n)).copy_from(x);
    m
}

fn blocks2(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> CMatrix {
    let (n1, n2) = (a.nrows(), d.nrows());
    let mut m = CMatrix::zeros(n1 + n2, n1 + n2);
    m.view_mut((0, 0), (n1, n1)).copy_from(a);
    m.view_mut((0, n1), (n1, n2)).copy_from(b);
    m.view_mut((n1, 0), (n2, n1)).copy_from(c);
    m.view_mut((n1, n1), (n2, n2)).copy_from(d);
    m
}

/// `[[0, D_A⊗1 − iM_ℓ], [D_A⊗1 + iM_ℓ, 0]]` on `H ⊕ H`.
pub fn build_even_dirac(h: &TruncatedHilbert, d_a: &CMatrix) -> Result<TruncatedOperator> {
    if d_a.nrows() != h.d || d_a.ncols() != h.d {
        return Err(Error::Precondition("D_A must be d×d".into()));
    }
    let defect = hermitian_defect(d_a);
    if defect > 1e-12 {
        return Err(Error::NotHermitian(defect));
    }
    let da = h.coefficient(d_a);
    let im = m_ell(h).matrix * Complex64::new(0.0, 1.0);
    let z = CMatrix::zeros(h.dim(), h.dim());
    let m = blocks2(&z, &(&da - &im), &(&da + &im), &z);
    Ok(TruncatedOperator::new(m, "even_dirac", None))
}

/// `[[1⊗M_ℓ, D_A⊗1], [D_A*⊗1, −1⊗M_ℓ]]` on `(C^{d1} ⊕ C^{d2}) ⊗ ℓ²(B_R)`,
/// for a `d1×d2` block `D_A`.
pub fn build_odd_dirac(spec: &LengthFunction, radius: f64, d_a: &CMatrix) -> Result<TruncatedOperator> {
    let (d1, d2) = (d_a.nrows(), d_a.ncols());
    let h1 = TruncatedHilbert::new(spec, d1, radius)?;
    let h2 = TruncatedHilbert::new(spec, d2, radius)?;
    let n = h1.ball.len();
    let mut off = CMatrix::zeros(h1.dim(), h2.dim());
    for i in 0..n {
        off.view_mut((i * d1, i * d2), (d1, d2)).copy_from(d_a);
    }
    let m1 = m_ell(&h1).matrix;
    let m2 = m_ell(&h2).matrix;
    Ok(TruncatedOperator::new(blocks2(&m1, &off, &off.adjoint(), &(-m2)), "odd_dirac", None))
}

/// Zero every column whose group index lies outside the first `keep` ball
/// elements; `copies` is the number of stacked `H` summands.
pub fn restrict_columns(t: &CMatrix, h: &TruncatedHilbert, keep: usize, copies: usize) -> CMatrix {
    let mut out = t.clone();
    let n = h.dim();
    for c in 0..copies {
        for col in (keep * h.d)..n {
            out.column_mut(c * n + col).fill(c64(0.0));
        }
    }
    out
}

/// Largest entry difference restricted to window columns.
pub fn window_residual(a: &CMatrix, b: &CMatrix, h: &TruncatedHilbert, keep: usize, copies: usize) -> f64 {
    max_abs_diff(&restrict_columns(a, h, keep, copies), &restrict_columns(b, h, keep, copies))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeminormValue {
    pub value: f64,
    /// Window radius `R − r`; columns beyond it were zeroed.
    pub window: f64,
    pub window_columns: usize,
}

/// `‖[D, x]‖` evaluated on the exactness window; a lower bound for the
/// untruncated seminorm. `x` is realized on `h`, `D` acts on `copies`
/// stacked copies of `H` (2 for the even Dirac operator).
pub fn lipschitz_seminorm(
    x: &CrossedElement,
    h: &TruncatedHilbert,
    action: &ActionSpec,
    dirac: &TruncatedOperator,
    tol: f64,
) -> Result<SeminormValue> {
    let xo = realize(x, h, action)?;
    let copies = dirac.matrix.nrows() / h.dim();
    if copies * h.dim() != dirac.matrix.nrows() {
        return Err(Error::Precondition("Dirac operator does not act on copies of the space".into()));
    }
    let window = xo.window.expect("realize records a window");
    let keep = h.window(window);
    if keep == 0 {
        return Err(Error::EmptyCompression(format!("support radius leaves no window inside radius {}", h.radius())));
    }
    let big = if copies == 1 {
        xo.matrix
    } else {
        let n = h.dim();
        let mut m = CMatrix::zeros(copies * n, copies * n);
        for c in 0..copies {
            m.view_mut((c * n, c * n), (n, n)).copy_from(&xo.matrix);
        }
        m
    };
    let comm = commutator(&dirac.matrix, &big);
    let value = op_norm(&restrict_columns(&comm, h, keep, copies), tol)?;
    Ok(SeminormValue { value, window, window_columns: keep })
}

/// Ball lengths of many elements, for callers outside the crate.
pub fn lengths(spec: &LengthFunction, elements: &[GroupElement]) -> Result<Vec<f64>> {
    lengths_of(spec, elements, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;

    fn z1() -> LengthFunction {
        LengthFunction::word(GroupSpec::standard(GroupKind::FreeAbelian { rank: 1 }))
    }

    fn lat(k: i64) -> GroupElement {
        GroupElement::Lattice(vec![k])
    }

    fn one() -> CMatrix {
        CMatrix::identity(1, 1)
    }

    #[test]
    fn lambda_compression_on_integers() {
        let h = TruncatedHilbert::new(&z1(), 1, 5.0).unwrap();
        let l = lambda(&h, &lat(1)).unwrap().matrix;
        let b = h.ball();
        let i4 = b.index_of(&lat(4)).unwrap();
        let i5 = b.index_of(&lat(5)).unwrap();
        assert_eq!(l[(i5, i4)], c64(1.0));
        assert!(l.column(i5).iter().all(|z| z.norm() == 0.0));
        assert!(lambda(&h, &lat(11)).is_err());
    }

    #[test]
    fn m_ell_diagonal() {
        let h = TruncatedHilbert::new(&z1(), 1, 3.0).unwrap();
        let d: Vec<f64> = m_ell(&h).matrix.diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn m_phi_g_entry() {
        let h = TruncatedHilbert::new(&z1(), 1, 6.0).unwrap();
        let m = m_phi_g(&h, &lat(2)).unwrap().matrix;
        let i = h.ball().index_of(&lat(5)).unwrap();
        assert_eq!(m[(i, i)], c64(2.0));
    }

    #[test]
    fn identity_element_realizes_identity() {
        let h = TruncatedHilbert::new(&z1(), 2, 4.0).unwrap();
        let x = CrossedElement::from_terms(2, [(lat(0), CMatrix::identity(2, 2))]).unwrap();
        let t = realize(&x, &h, &ActionSpec::trivial(h.kind(), 2)).unwrap();
        assert_eq!(t.matrix, CMatrix::identity(h.dim(), h.dim()));
    }

    #[test]
    fn shift_sum_norm_approaches_two() {
        let x = CrossedElement::from_terms(1, [(lat(1), one()), (lat(-1), one())]).unwrap();
        let mut prev = 0.0;
        for r in [6.0, 20.0, 40.0] {
            let h = TruncatedHilbert::new(&z1(), 1, r).unwrap();
            let t = realize(&x, &h, &ActionSpec::trivial(h.kind(), 1)).unwrap();
            assert!(t.is_hermitian());
            let n = t.norm(1e-12).unwrap();
            assert!(n >= prev - 1e-12);
            prev = n;
        }
        assert!((2.0 - prev).abs() < 0.05);
    }

    #[test]
    fn commutator_with_m_ell() {
        let h = TruncatedHilbert::new(&z1(), 1, 10.0).unwrap();
        let l = lambda(&h, &lat(1)).unwrap();
        let c = commutator(&m_ell(&h).matrix, &l.matrix);
        assert!((op_norm(&c, 1e-12).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn even_dirac_with_zero_coefficient_operator() {
        let h = TruncatedHilbert::new(&z1(), 1, 2.0).unwrap();
        let d = build_even_dirac(&h, &CMatrix::zeros(1, 1)).unwrap();
        assert!(d.is_hermitian());
        let mut ev: Vec<f64> = d.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 2.0).abs() < 1e-12 && (ev[ev.len() - 1] - 2.0).abs() < 1e-12);
        let bad = CMatrix::from_row_slice(1, 1, &[Complex64::new(0.0, 1.0)]);
        assert!(matches!(build_even_dirac(&h, &bad), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn odd_dirac_with_zero_block() {
        let l = z1();
        let d = build_odd_dirac(&l, 2.0, &CMatrix::zeros(1, 1)).unwrap();
        let diag: Vec<f64> = d.matrix.diagonal().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![0.0, 1.0, 1.0, 2.0, 2.0, -0.0, -1.0, -1.0, -2.0, -2.0]);
        assert!(d.is_hermitian());
    }

    #[test]
    fn finite_cyclic_seminorm() {
        let l = LengthFunction::word(GroupSpec::standard(GroupKind::FiniteCyclic { order: 4 }));
        let h = TruncatedHilbert::new(&l, 1, 2.0).unwrap();
        assert!(h.ball().covers_group);
        let x = CrossedElement::from_terms(1, [(GroupElement::Residue(1), one())]).unwrap();
        let act = ActionSpec::trivial(h.kind(), 1);
        let t = realize(&x, &h, &act).unwrap();
        // a genuine permutation matrix
        assert_eq!(&t.matrix * t.matrix.adjoint(), CMatrix::identity(4, 4));
        let c = commutator(&m_ell(&h).matrix, &t.matrix);
        assert!((op_norm(&c, 1e-12).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn seminorm_of_constants_vanishes() {
        let h = TruncatedHilbert::new(&z1(), 1, 4.0).unwrap();
        let act = ActionSpec::trivial(h.kind(), 1);
        let d = build_even_dirac(&h, &CMatrix::zeros(1, 1)).unwrap();
        let x = CrossedElement::from_terms(1, [(lat(0), one())]).unwrap();
        assert_eq!(lipschitz_seminorm(&x, &h, &act, &d, 1e-12).unwrap().value, 0.0);
        let y = CrossedElement::from_terms(1, [(lat(1), one())]).unwrap();
        let m = TruncatedOperator::new(m_ell(&h).matrix, "m_ell", None);
        assert!((lipschitz_seminorm(&y, &h, &act, &m, 1e-12).unwrap().value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn inconsistent_action_rejected() {
        let u = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(1.0), Complex64::new(0.0, 1.0)]));
        // diag(1, i) has order 4, so its cube is not scalar
        let err = ActionSpec::new(GroupKind::FiniteCyclic { order: 3 }, vec![u.clone()]);
        assert!(matches!(err, Err(Error::InconsistentAction { .. })));
        assert!(ActionSpec::new(GroupKind::FiniteCyclic { order: 4 }, vec![u]).is_ok());
    }
}
