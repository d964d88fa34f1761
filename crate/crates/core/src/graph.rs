//! Undirected formation topology and its oriented incidence matrix.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

use crate::error::{FormationError, Result};
use crate::linalg::numerical_rank;

/// An undirected simple graph with a fixed lexicographic edge order.
///
/// Every stacked per-edge quantity in the crate (errors, distances, rows of
/// rigidity matrices) is indexed by the position of the edge in [`edges`].
///
/// [`edges`]: FormationGraph::edges
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormationGraph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    edge_index: BTreeMap<(usize, usize), usize>,
}

impl FormationGraph {
    /// Builds a graph from zero-based vertex pairs. Pairs are normalized to
    /// `(min, max)` and sorted.
    pub fn new(n_vertices: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if n_vertices == 0 {
            return Err(FormationError::InvalidParameter(
                "graph needs at least one vertex".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in pairs {
            for v in [a, b] {
                if v >= n_vertices {
                    return Err(FormationError::VertexOutOfRange {
                        vertex: v,
                        n: n_vertices,
                    });
                }
            }
            if a == b {
                return Err(FormationError::SelfLoop(a));
            }
            let key = (a.min(b), a.max(b));
            if !set.insert(key) {
                return Err(FormationError::DuplicateEdge(key.0, key.1));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let edge_index = edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();
        Ok(Self {
            n_vertices,
            edges,
            edge_index,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Normalized edges `(i, j)` with `i < j`, in stacking order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Position of edge `{i, j}` in the stacking order, in either orientation.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edge_index.get(&(i.min(j), i.max(j))).copied()
    }

    /// Neighbor set of vertex `i`, ascending.
    pub fn neighbors(&self, i: usize) -> Result<Vec<usize>> {
        if i >= self.n_vertices {
            return Err(FormationError::VertexOutOfRange {
                vertex: i,
                n: self.n_vertices,
            });
        }
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Oriented incidence matrix: tail `i` gets −1, head `j` gets +1.
    pub fn incidence(&self) -> IncidenceMatrix {
        let mut h = DMatrix::zeros(self.n_edges(), self.n_vertices);
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            h[(k, i)] = -1.0;
            h[(k, j)] = 1.0;
        }
        IncidenceMatrix { entries: h }
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n_vertices];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(a, b) in &self.edges {
                let w = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// `m × n` matrix over {−1, 0, +1}; row `k` encodes oriented edge `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    pub entries: DMatrix<f64>,
}

impl IncidenceMatrix {
    pub fn rank(&self) -> usize {
        numerical_rank(&self.entries).rank
    }

    /// `H ⊗ I₂`, mapping stacked positions to stacked relative positions.
    pub fn kron_identity2(&self) -> DMatrix<f64> {
        self.entries.kronecker(&DMatrix::identity(2, 2))
    }
}
