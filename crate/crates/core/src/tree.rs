//! Finite balls `V_n` of the Cayley tree of order `k`.
//!
//! Vertices are numbered breadth first, so every generation `W_d` is a
//! contiguous index range and the ball `V_{n-1}` is a prefix of `V_n`.

use std::ops::Range;

use crate::error::{Error, Result};

/// Largest ball [`FiniteTree::build`] will materialize.
pub const MAX_VERTICES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTree {
    k: usize,
    depth: usize,
    parent: Vec<Option<usize>>,
    depth_of: Vec<usize>,
    generations: Vec<Range<usize>>,
    edges: Vec<(usize, usize)>,
}

impl FiniteTree {
    /// Builds `V_n` for the tree of order `k` rooted at vertex 0. The root has
    /// `k + 1` children, every other interior vertex has `k`.
    pub fn build(k: usize, depth: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParams("tree order k must be at least 1".into()));
        }
        let too_large = Error::TreeTooLarge { k, depth, limit: MAX_VERTICES };

        let mut sizes = Vec::with_capacity(depth + 1);
        let mut total = 0usize;
        for d in 0..=depth {
            let size = generation_size(k, d).ok_or_else(|| too_large.clone())?;
            total = total.checked_add(size).ok_or_else(|| too_large.clone())?;
            if total > MAX_VERTICES {
                return Err(too_large);
            }
            sizes.push(size);
        }

        let mut parent = Vec::with_capacity(total);
        let mut depth_of = Vec::with_capacity(total);
        let mut generations = Vec::with_capacity(depth + 1);
        let mut edges = Vec::with_capacity(total.saturating_sub(1));

        parent.push(None);
        depth_of.push(0);
        generations.push(0..1);
        for d in 1..=depth {
            let start = parent.len();
            for p in generations[d - 1].clone() {
                let children = if d == 1 { k + 1 } else { k };
                for _ in 0..children {
                    let v = parent.len();
                    parent.push(Some(p));
                    depth_of.push(d);
                    edges.push((p, v));
                }
            }
            debug_assert_eq!(parent.len() - start, sizes[d]);
            generations.push(start..parent.len());
        }

        Ok(Self { k, depth, parent, depth_of, generations, edges })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Radius `n` of the ball.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_vertices(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn depth_of(&self, v: usize) -> usize {
        self.depth_of[v]
    }

    /// Vertex range of the sphere `W_d`.
    pub fn generation(&self, d: usize) -> Range<usize> {
        self.generations[d].clone()
    }

    /// The outermost sphere `W_n`.
    pub fn boundary(&self) -> Range<usize> {
        self.generations[self.depth].clone()
    }

    /// Edge set `L_n` as (parent, child) pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn children(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let d = self.depth_of[v];
        let range = if d < self.depth { self.generations[d + 1].clone() } else { 0..0 };
        range.filter(move |&c| self.parent[c] == Some(v))
    }
}

/// `|W_d|`: 1 for the root, `(k+1)·k^{d-1}` afterwards.
pub fn generation_size(k: usize, d: usize) -> Option<usize> {
    if d == 0 {
        return Some(1);
    }
    let pow = u32::try_from(d - 1).ok().and_then(|e| k.checked_pow(e))?;
    (k + 1).checked_mul(pow)
}
