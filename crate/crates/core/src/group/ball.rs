use std::collections::HashMap;

use serde::Serialize;

use super::{GroupElement, GroupKind};
use crate::error::{Error, Result};

/// Default cap on the number of elements in a ball.
pub const DEFAULT_BALL_CAP: usize = 5_000_000;

/// Metric ball `{g : ℓ(g) ≤ radius}`, ordered by `(ℓ(g), coordinates)`.
///
/// Immutable once built; the identity is always the first element.
#[derive(Clone, Debug, Serialize)]
pub struct BallTable {
    pub radius: f64,
    elements: Vec<GroupElement>,
    lengths: Vec<f64>,
    #[serde(skip)]
    index: HashMap<GroupElement, usize>,
    /// True when the ball is the whole (finite) group.
    pub covers_group: bool,
}

impl BallTable {
    pub(crate) fn from_pairs(radius: f64, mut pairs: Vec<(GroupElement, f64)>, covers_group: bool) -> Self {
        pairs.sort_by(|(ga, la), (gb, lb)| la.total_cmp(lb).then_with(|| ga.cmp(gb)));
        let index = pairs.iter().enumerate().map(|(i, (g, _))| (g.clone(), i)).collect();
        let (elements, lengths) = pairs.into_iter().unzip();
        BallTable { radius, elements, lengths, index, covers_group }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn element(&self, i: usize) -> &GroupElement {
        &self.elements[i]
    }

    pub fn length_at(&self, i: usize) -> f64 {
        self.lengths[i]
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn length_of(&self, g: &GroupElement) -> Option<f64> {
        self.index_of(g).map(|i| self.lengths[i])
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index.contains_key(g)
    }

    /// Indices of elements with `ℓ ≤ r`; a prefix thanks to the ordering.
    pub fn prefix_within(&self, r: f64) -> usize {
        self.lengths.partition_point(|&l| l <= r + 1e-12)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, f64)> {
        self.elements.iter().zip(self.lengths.iter().copied())
    }
}

/// Incremental breadth-first search of a Cayley graph from the identity.
#[derive(Clone, Debug)]
pub(crate) struct CayleyBfs {
    kind: GroupKind,
    generators: Vec<GroupElement>,
    pub(crate) dist: HashMap<GroupElement, u32>,
    frontier: Vec<GroupElement>,
    pub(crate) radius: u32,
    pub(crate) exhausted: bool,
}

impl CayleyBfs {
    pub(crate) fn new(kind: GroupKind, generators: Vec<GroupElement>) -> Self {
        let id = kind.identity();
        let mut dist = HashMap::new();
        dist.insert(id.clone(), 0);
        let exhausted = generators.is_empty();
        CayleyBfs { kind, generators, dist, frontier: vec![id], radius: 0, exhausted }
    }

    /// Extend the search by one layer.
    fn step(&mut self, cap: usize) -> Result<()> {
        if self.exhausted {
            return Ok(());
        }
        let next_radius = self.radius + 1;
        let mut next = Vec::new();
        for g in &self.frontier {
            for s in &self.generators {
                let h = self.kind.multiply_unchecked(g, s);
                if !self.dist.contains_key(&h) {
                    self.dist.insert(h.clone(), next_radius);
                    next.push(h);
                }
            }
            if self.dist.len() > cap {
                return Err(Error::CapExceeded { count: self.dist.len(), radius: next_radius as f64, cap });
            }
        }
        self.radius = next_radius;
        if next.is_empty() {
            self.exhausted = true;
        }
        self.frontier = next;
        Ok(())
    }

    pub(crate) fn grow_to(&mut self, radius: u32, cap: usize) -> Result<()> {
        while self.radius < radius && !self.exhausted {
            self.step(cap)?;
        }
        Ok(())
    }

    /// Grow until `g` is reached; returns its distance.
    pub(crate) fn find(&mut self, g: &GroupElement, cap: usize) -> Result<u32> {
        loop {
            if let Some(&d) = self.dist.get(g) {
                return Ok(d);
            }
            if self.exhausted {
                return Err(Error::LengthUnavailable(format!("{g} is not reachable from the generators")));
            }
            self.step(cap)?;
        }
    }
}
