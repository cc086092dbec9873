//! Exact facet enumeration for centrally symmetric lattice polytopes in low
//! dimension.
//!
//! Every facet of `conv(P)` is spanned by `m` linearly independent vertices,
//! so enumerating `m`-subsets, solving `σ·p = 1` exactly and keeping the
//! supporting solutions yields the complete facet list. At the sizes used
//! here (`m ≤ 4`, a few dozen points) this beats maintaining a
//! double-description structure.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub const MAX_DIMENSION: usize = 4;

pub fn rational(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// A facet `{x : normal·x = 1}` of a polytope containing the origin in its
/// interior, together with the indices of the input points lying on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Facet {
    pub normal: Vec<BigRational>,
    pub points: Vec<usize>,
}

pub fn dot(sigma: &[BigRational], x: &[i64]) -> BigRational {
    sigma.iter().zip(x).fold(BigRational::zero(), |acc, (s, &c)| acc + s * rational(c))
}

/// Solve the square system `a·x = b` exactly; `None` if singular.
fn solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = BigRational::one() / a[col][col].clone();
        for x in &mut a[col][col..n] {
            *x = &*x * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (x, p) in a[r][col..n].iter_mut().zip(&pivot_row[col..n]) {
                    *x -= p * &f;
                }
                let v = &b[col] * &f;
                b[r] -= v;
            }
        }
    }
    Some(b)
}

/// Row-reduce a rational matrix; returns the rank and the indices of the
/// rows that form a basis of the row space (earliest rows preferred).
pub fn rank_with_basis(rows: &[Vec<BigRational>]) -> (usize, Vec<usize>) {
    let mut basis: Vec<Vec<BigRational>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut chosen = Vec::new();
    for (idx, row) in rows.iter().enumerate() {
        let mut r = row.clone();
        for (b, &p) in basis.iter().zip(&pivots) {
            if !r[p].is_zero() {
                let f = r[p].clone();
                for (x, y) in r.iter_mut().zip(b) {
                    *x -= y * &f;
                }
            }
        }
        if let Some(p) = r.iter().position(|x| !x.is_zero()) {
            let inv = BigRational::one() / r[p].clone();
            for x in r.iter_mut() {
                *x = &*x * &inv;
            }
            // keep earlier basis rows reduced in the new pivot column
            for b in basis.iter_mut() {
                if !b[p].is_zero() {
                    let f = b[p].clone();
                    for (x, y) in b.iter_mut().zip(&r) {
                        *x -= y * &f;
                    }
                }
            }
            basis.push(r);
            pivots.push(p);
            chosen.push(idx);
        }
    }
    (basis.len(), chosen)
}

/// A non-zero integer vector orthogonal to all `points`, if they fail to span.
fn orthogonal_witness(points: &[Vec<i64>], dim: usize) -> Option<Vec<BigRational>> {
    let rows: Vec<Vec<BigRational>> = points.iter().map(|p| p.iter().map(|&c| rational(c)).collect()).collect();
    let (rank, chosen) = rank_with_basis(&rows);
    if rank == dim {
        return None;
    }
    // Complete the chosen rows with unit vectors and read off a kernel vector
    // by solving against a free coordinate.
    let basis: Vec<&Vec<BigRational>> = chosen.iter().map(|&i| &rows[i]).collect();
    for free in 0..dim {
        // Try x with x[free] = 1 and zero elsewhere except pivot coordinates.
        let mut a = Vec::new();
        let mut b = Vec::new();
        let others: Vec<usize> = (0..dim).filter(|&c| c != free).collect();
        for r in &basis {
            a.push(others.iter().map(|&c| r[c].clone()).collect::<Vec<_>>());
            b.push(-r[free].clone());
        }
        // Least-squares is not needed: pick `rank` of the other coordinates.
        for combo in combinations(others.len(), basis.len()) {
            let sub: Vec<Vec<BigRational>> =
                a.iter().map(|row| combo.iter().map(|&c| row[c].clone()).collect()).collect();
            if let Some(sol) = solve(sub, b.clone()) {
                let mut x = vec![BigRational::zero(); dim];
                x[free] = BigRational::one();
                for (k, &c) in combo.iter().enumerate() {
                    x[others[c]] = sol[k].clone();
                }
                return Some(x);
            }
        }
        if basis.is_empty() {
            let mut x = vec![BigRational::zero(); dim];
            x[free] = BigRational::one();
            return Some(x);
        }
    }
    None
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn format_hyperplane(normal: &[BigRational]) -> String {
    let terms: Vec<String> =
        normal.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| format!("{c}*x{}", i + 1)).collect();
    format!("{} = 0", terms.join(" + "))
}

/// Facets of `conv(points)` for a centrally symmetric, full-dimensional point
/// set in `Z^dim`.
pub fn facets(points: &[Vec<i64>], dim: usize) -> Result<Vec<Facet>> {
    if dim == 0 {
        return Ok(Vec::new());
    }
    if dim > MAX_DIMENSION {
        return Err(Error::Precondition(format!("facet enumeration supports dimension ≤ {MAX_DIMENSION}, got {dim}")));
    }
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Precondition("point dimension mismatch".into()));
    }
    for p in points {
        let neg: Vec<i64> = p.iter().map(|c| -c).collect();
        if !points.contains(&neg) {
            return Err(Error::Precondition(format!("point set is not centrally symmetric: {p:?} lacks its negative")));
        }
    }
    if let Some(w) = orthogonal_witness(points, dim) {
        return Err(Error::DegeneratePolytope(format_hyperplane(&w)));
    }

    // Distinct non-zero candidates; zero is interior.
    let mut candidates: Vec<Vec<i64>> = Vec::new();
    for p in points {
        if p.iter().any(|&c| c != 0) && !candidates.contains(p) {
            candidates.push(p.clone());
        }
    }

    let mut found: BTreeMap<Vec<BigRational>, ()> = BTreeMap::new();
    for combo in combinations(candidates.len(), dim) {
        let a: Vec<Vec<BigRational>> =
            combo.iter().map(|&i| candidates[i].iter().map(|&c| rational(c)).collect()).collect();
        let Some(sigma) = solve(a, vec![BigRational::one(); dim]) else {
            continue;
        };
        if candidates.iter().all(|p| dot(&sigma, p) <= BigRational::one()) {
            found.insert(sigma, ());
        }
    }

    Ok(found
        .into_keys()
        .map(|normal| {
            let on: Vec<usize> =
                points.iter().enumerate().filter(|(_, p)| dot(&normal, p).is_one()).map(|(i, _)| i).collect();
            Facet { normal, points: on }
        })
        .collect())
}

/// `max_F σ_F(x)`, the gauge of the polytope.
pub fn gauge(facets: &[Facet], x: &[i64]) -> BigRational {
    facets.iter().map(|f| dot(&f.normal, x)).max().unwrap_or_else(BigRational::zero)
}

pub fn to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn abs(q: &BigRational) -> BigRational {
    q.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[[i64; 2]]) -> Vec<Vec<i64>> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn diamond_has_four_facets() {
        let f = facets(&pts(&[[1, 0], [-1, 0], [0, 1], [0, -1]]), 2).unwrap();
        assert_eq!(f.len(), 4);
        let xy = vec![rational(1), rational(1)];
        assert!(f.iter().any(|fc| fc.normal == xy));
    }

    #[test]
    fn segment() {
        let f = facets(&[vec![1], vec![-1]], 1).unwrap();
        let normals: Vec<_> = f.iter().map(|x| x.normal[0].clone()).collect();
        assert_eq!(normals, vec![rational(-1), rational(1)]);
    }

    #[test]
    fn degenerate_names_hyperplane() {
        let err = facets(&pts(&[[1, 1], [-1, -1], [2, 2], [-2, -2]]), 2).unwrap_err();
        match err {
            Error::DegeneratePolytope(h) => assert!(h.contains("x1") && h.contains("x2"), "{h}"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn cube_in_three_dimensions() {
        let mut p = Vec::new();
        for x in [-1, 1] {
            for y in [-1, 1] {
                for z in [-1, 1] {
                    p.push(vec![x, y, z]);
                }
            }
        }
        let f = facets(&p, 3).unwrap();
        assert_eq!(f.len(), 6);
        assert!(f.iter().all(|fc| fc.points.len() == 4));
    }

    #[test]
    fn rank_and_combinations() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        let rows =
            vec![vec![rational(1), rational(1)], vec![rational(2), rational(2)], vec![rational(1), rational(-1)]];
        assert_eq!(rank_with_basis(&rows), (2, vec![0, 2]));
    }
}
