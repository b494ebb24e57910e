//! Shared helpers for unit tests: random graph generation and dense
//! reference computations. Test-only; never compiled into the library.

use crate::graph::Graph;
use nalgebra::DMatrix;
use rand::Rng;

/// Random connected graph: a random spanning tree plus independent extra
/// edges with probability `extra_prob`, weights uniform in (0.05, 1.0].
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize, extra_prob: f64) -> Graph {
    assert!(n >= 2);
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        edges.push((parent, v, rng.gen_range(0.05..=1.0)));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let in_tree = edges.iter().any(|&(a, b, _)| (a, b) == (i, j) || (a, b) == (j, i));
            if !in_tree && rng.gen_bool(extra_prob) {
                edges.push((i, j, rng.gen_range(0.05..=1.0)));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Dense L = D − W assembled directly from the edge list.
pub fn dense_laplacian(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count();
    let mut m = DMatrix::zeros(n, n);
    for e in g.edges() {
        m[(e.i, e.j)] -= e.weight;
        m[(e.j, e.i)] -= e.weight;
        m[(e.i, e.i)] += e.weight;
        m[(e.j, e.j)] += e.weight;
    }
    m
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
