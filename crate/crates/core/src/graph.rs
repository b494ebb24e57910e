//! Sparse undirected weighted graphs, the combinatorial Laplacian L = D − W,
//! and the graph Laplacian regularizer xᵀLx.
//!
//! Node indices are 0-based everywhere in the API; the CSV interchange format
//! (see [`crate::io`]) is 1-based.

use crate::error::{EdgeErrorKind, Error, Result};

/// One undirected edge, stored once with `i < j` and a strictly positive weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Sparse undirected positively weighted graph.
///
/// Immutable after construction and safe to share across threads. Edges are
/// kept in a coordinate list sorted by `(i, j)`; duplicate pairs are rejected
/// rather than merged so that data errors surface early.
#[derive(Debug, Clone)]
pub struct Graph {
    node_count: usize,
    edges: Vec<Edge>,
    /// Per-node adjacency `(neighbor, weight)`, sorted by neighbor id.
    neighbors: Vec<Vec<(usize, f64)>>,
}

/// Weighted degrees D_{i,i} = Σ_j W_{i,j} plus the unweighted mean degree
/// d̄ = 2|E|/N. The edge-count heuristic for noise estimation consumes the
/// unweighted mean; weighted degrees are exposed for diagnostics.
#[derive(Debug, Clone)]
pub struct DegreeStats {
    pub weighted: Vec<f64>,
    pub mean_unweighted: f64,
}

impl Graph {
    /// Build a graph from `(i, j, weight)` triples with 0-based indices.
    ///
    /// Endpoints may come in either order; they are normalized to `i < j`.
    /// Rejects self-loops, nonpositive or non-finite weights, out-of-range
    /// indices, and duplicate pairs.
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut list: Vec<Edge> = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidEdge {
                    i: a,
                    j: b,
                    reason: EdgeErrorKind::SelfLoop,
                });
            }
            if !w.is_finite() {
                return Err(Error::InvalidEdge {
                    i: a,
                    j: b,
                    reason: EdgeErrorKind::NonFiniteWeight,
                });
            }
            if w <= 0.0 {
                return Err(Error::InvalidEdge {
                    i: a,
                    j: b,
                    reason: EdgeErrorKind::NonPositiveWeight,
                });
            }
            for &idx in &[a, b] {
                if idx >= node_count {
                    return Err(Error::NodeOutOfRange {
                        index: idx,
                        node_count,
                    });
                }
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            list.push(Edge { i, j, weight: w });
        }
        list.sort_by(|a, b| (a.i, a.j).cmp(&(b.i, b.j)));
        for pair in list.windows(2) {
            if pair[0].i == pair[1].i && pair[0].j == pair[1].j {
                return Err(Error::InvalidEdge {
                    i: pair[1].i,
                    j: pair[1].j,
                    reason: EdgeErrorKind::Duplicate,
                });
            }
        }
        let mut neighbors = vec![Vec::new(); node_count];
        for e in &list {
            neighbors[e.i].push((e.j, e.weight));
            neighbors[e.j].push((e.i, e.weight));
        }
        for adj in &mut neighbors {
            adj.sort_by_key(|&(n, _)| n);
        }
        Ok(Graph {
            node_count,
            edges: list,
            neighbors,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted by `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `node` as `(neighbor, weight)`, sorted by neighbor id.
    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.neighbors[node]
    }

    pub fn max_weight(&self) -> Option<f64> {
        self.edges
            .iter()
            .map(|e| e.weight)
            .fold(None, |acc, w| Some(acc.map_or(w, |m: f64| m.max(w))))
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let mut weighted = vec![0.0; self.node_count];
        for e in &self.edges {
            weighted[e.i] += e.weight;
            weighted[e.j] += e.weight;
        }
        let mean_unweighted = if self.node_count == 0 {
            0.0
        } else {
            2.0 * self.edges.len() as f64 / self.node_count as f64
        };
        DegreeStats {
            weighted,
            mean_unweighted,
        }
    }

    /// Graph Laplacian regularizer Σ_{(i,j)∈E} w_{ij}(x_i − x_j)², which
    /// equals xᵀLx. Nonnegative for positive weights.
    pub fn glr(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.node_count {
            return Err(Error::DimensionMismatch {
                what: "signal",
                expected: self.node_count,
                found: x.len(),
            });
        }
        let mut acc = 0.0;
        for e in &self.edges {
            let d = x[e.i] - x[e.j];
            acc += e.weight * d * d;
        }
        Ok(acc)
    }

    pub fn laplacian(&self) -> LaplacianOperator<'_> {
        LaplacianOperator {
            graph: self,
            degrees: self.degree_stats().weighted,
        }
    }

    /// Number of connected components (BFS over the adjacency lists).
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.node_count];
        let mut components = 0;
        let mut queue = std::collections::VecDeque::new();
        for start in 0..self.node_count {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.neighbors[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.node_count <= 1 || self.component_count() == 1
    }
}

/// A graph signal: one real value per node. Units (if any) ride along as
/// opaque metadata and never influence computation.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignal {
    values: Vec<f64>,
    unit: Option<String>,
}

impl GraphSignal {
    /// Rejects non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "signal" });
        }
        Ok(GraphSignal { values, unit: None })
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = Some(unit.into());
        self
    }

    pub fn unit(&self) -> Option<&str> {
        self.unit.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for GraphSignal {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// The combinatorial Laplacian L = D − W of a graph, exposed only through
/// matrix-vector products; the dense matrix is never materialized.
///
/// L is symmetric, positive semi-definite, and maps the constant vector to
/// zero. `matvec` accumulates edge contributions in the stored edge order
/// `(i, j)` ascending, so results are deterministic.
#[derive(Debug, Clone)]
pub struct LaplacianOperator<'g> {
    graph: &'g Graph,
    degrees: Vec<f64>,
}

impl LaplacianOperator<'_> {
    pub fn node_count(&self) -> usize {
        self.graph.node_count
    }

    /// Weighted degrees, i.e. the diagonal of L.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Computes (D − W)v in O(|E|).
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.graph.node_count;
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                what: "matvec input",
                expected: n,
                found: v.len(),
            });
        }
        let mut out = vec![0.0; n];
        self.matvec_into(v, &mut out);
        Ok(out)
    }

    /// Like [`matvec`](Self::matvec) but writing into a caller-provided buffer.
    /// Lengths must already match.
    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.graph.node_count);
        debug_assert_eq!(out.len(), self.graph.node_count);
        for (o, (d, x)) in out.iter_mut().zip(self.degrees.iter().zip(v)) {
            *o = d * x;
        }
        for e in &self.graph.edges {
            out[e.i] -= e.weight * v[e.j];
            out[e.j] -= e.weight * v[e.i];
        }
    }
}
