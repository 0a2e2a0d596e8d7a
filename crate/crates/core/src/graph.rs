//! Immutable undirected graphs in compressed adjacency form.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph over dense vertex ids `0..n`.
///
/// Neighbor lists are stored as one flat sorted array indexed by per-vertex
/// offsets, so every neighborhood scan is a contiguous slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    id: String,
    n: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an edge list. Edges are normalized to `(min, max)`;
    /// self-loops, duplicates and out-of-range endpoints are rejected.
    pub fn new(id: impl Into<String>, n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n {
                return Err(Error::Index { index: u, n });
            }
            if v >= n {
                return Err(Error::Index { index: v, n });
            }
            if u == v {
                return Err(Error::Parameter(format!("self-loop on vertex {u}")));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::Parameter(format!("duplicate edge {{{u},{v}}}")));
            }
        }
        Ok(Self::from_sorted_set(id.into(), n, set))
    }

    fn from_sorted_set(id: String, n: usize, set: BTreeSet<(usize, usize)>) -> Self {
        let edges: Vec<(usize, usize)> = set.into_iter().collect();
        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; edges.len() * 2];
        for &(u, v) in &edges {
            neighbors[fill[u]] = v;
            fill[u] += 1;
            neighbors[fill[v]] = u;
            fill[v] += 1;
        }
        for v in 0..n {
            neighbors[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Graph { id, n, edges, offsets, neighbors }
    }

    pub fn empty(id: impl Into<String>, n: usize) -> Self {
        Self::from_sorted_set(id.into(), n, BTreeSet::new())
    }

    pub fn complete(id: impl Into<String>, n: usize) -> Self {
        let set = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Self::from_sorted_set(id.into(), n, set)
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(id: impl Into<String>, n: usize) -> Self {
        let set = (1..n).map(|v| (v - 1, v)).collect();
        Self::from_sorted_set(id.into(), n, set)
    }

    /// Star with center 0 and `leaves` leaves.
    pub fn star(id: impl Into<String>, leaves: usize) -> Self {
        let set = (1..=leaves).map(|v| (0, v)).collect();
        Self::from_sorted_set(id.into(), leaves + 1, set)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor slice. Panics on an out-of-range vertex; use
    /// [`Graph::try_neighbors`] for a checked variant.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn try_neighbors(&self, v: usize) -> Result<&[usize]> {
        self.check(v)?;
        Ok(self.neighbors(v))
    }

    pub fn degree(&self, v: usize) -> Result<usize> {
        self.check(v)?;
        Ok(self.offsets[v + 1] - self.offsets[v])
    }

    pub fn are_adjacent(&self, u: usize, v: usize) -> Result<bool> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.adjacent(u, v))
    }

    #[inline]
    pub(crate) fn adjacent(&self, u: usize, v: usize) -> bool {
        u != v && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Graph on the same vertices whose edges are exactly the non-edges of `self`.
    pub fn complement(&self) -> Graph {
        let mut set = BTreeSet::new();
        for u in 0..self.n {
            let nb = self.neighbors(u);
            for v in u + 1..self.n {
                if nb.binary_search(&v).is_err() {
                    set.insert((u, v));
                }
            }
        }
        Self::from_sorted_set(format!("{}~c", self.id), self.n, set)
    }

    /// Same structure under a new identifier.
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Relabels vertices: vertex `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::Parameter("permutation length mismatch".into()));
        }
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Graph::new(self.id.clone(), self.n, &edges)
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::Index { index: v, n: self.n })
        }
    }

    pub fn to_record(&self) -> GraphRecord {
        GraphRecord {
            id: serde_json::Value::String(self.id.clone()),
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }

    pub fn from_record(rec: GraphRecord) -> Result<Graph> {
        let id = match rec.id {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        };
        let edges: Vec<_> = rec.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(id, rec.n, &edges)
    }
}

/// One line of the JSON-lines dataset format: `{"id": ..., "n": ..., "edges": [[u,v], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphRecord {
    pub id: serde_json::Value,
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}
