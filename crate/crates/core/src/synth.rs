//! Seeded synthetic benchmark instances with known ground truth.
//!
//! Reproducibility: all randomness comes from ChaCha20 streams derived from
//! the spec's seed (stream 0 graph, stream 1 signal, stream 2 noise), and
//! Gaussians use the Box–Muller cosine transform over the stream's uniforms.
//! The same seed therefore yields bit-identical instances on the same
//! platform; distinct streams mean changing σ never perturbs the graph or
//! the ground-truth signal.

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSignal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Dense decompositions back the low-pass signal model, so its instances are
/// capped at this many nodes.
pub const LOWPASS_NODE_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFamily {
    /// Two dense clusters (strong intra ≈ 0.9, weak inter ≈ 0.1 weights).
    TwoCluster,
    /// Uniform points in the unit square, radius graph with Gaussian kernel
    /// weights, stitched connected if needed.
    RandomGeometric,
    /// Jittered lattice with 4-neighbor adjacency, kernel weights.
    CountyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalModel {
    /// Exactly constant on each cluster (or spatial half).
    PiecewiseConstant,
    /// x° = V·α with α_i² = e^{−6i/N} (α₁ = 0), normalized to unit RMS.
    LowPass,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub family: GraphFamily,
    pub n: usize,
    pub sigma: f64,
    pub signal: SignalModel,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SynthInstance {
    pub graph: Graph,
    pub truth: GraphSignal,
    pub noisy: GraphSignal,
}

/// Standard normal via Box–Muller (cosine branch), one draw per call.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]: keeps ln finite
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn generate(spec: &SynthSpec) -> Result<SynthInstance> {
    if spec.n < 2 {
        return Err(Error::DimensionMismatch {
            what: "synthetic instance size (need N >= 2)",
            expected: 2,
            found: spec.n,
        });
    }
    if spec.sigma < 0.0 {
        return Err(Error::Negative {
            what: "noise sigma",
            value: spec.sigma,
        });
    }
    let mut graph_rng = stream_rng(spec.seed, 0);
    let (graph, pattern) = match spec.family {
        GraphFamily::TwoCluster => two_cluster(&mut graph_rng, spec.n)?,
        GraphFamily::RandomGeometric => random_geometric(&mut graph_rng, spec.n)?,
        GraphFamily::CountyGrid => county_grid(&mut graph_rng, spec.n)?,
    };

    let mut signal_rng = stream_rng(spec.seed, 1);
    let truth = match spec.signal {
        SignalModel::PiecewiseConstant => pattern,
        SignalModel::LowPass => low_pass_signal(&graph, &mut signal_rng)?,
    };

    let mut noise_rng = stream_rng(spec.seed, 2);
    let noisy: Vec<f64> = truth
        .iter()
        .map(|t| t + spec.sigma * standard_normal(&mut noise_rng))
        .collect();

    Ok(SynthInstance {
        graph,
        truth: GraphSignal::new(truth)?,
        noisy: GraphSignal::new(noisy)?,
    })
}

/// Two clusters of sizes ⌊n/2⌋ and ⌈n/2⌉: a random spanning tree plus
/// Bernoulli(min(0.35, 70/n)) extra pairs inside each cluster with weights
/// ≈ 0.9, Bernoulli(min(0.02, 4/n)) cross pairs with weights ≈ 0.1 (at least
/// one cross edge). The densities keep the per-node degree bounded for large
/// n. Pattern: 0 on the first cluster, 5 on the second.
fn two_cluster<R: Rng>(rng: &mut R, n: usize) -> Result<(Graph, Vec<f64>)> {
    let n0 = n / 2;
    let p_in = (70.0 / n as f64).min(0.35);
    let p_out = (4.0 / n as f64).min(0.02);
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut tree: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    let intra_weight = |rng: &mut R| (0.9 + 0.02 * standard_normal(rng)).clamp(0.5, 1.0);
    for (lo, hi) in [(0, n0), (n0, n)] {
        for v in (lo + 1)..hi {
            let parent = rng.gen_range(lo..v);
            let w = intra_weight(rng);
            edges.push((parent, v, w));
            tree.insert((parent, v));
        }
        for i in lo..hi {
            for j in (i + 1)..hi {
                if !tree.contains(&(i, j)) && rng.gen_bool(p_in) {
                    let w = intra_weight(rng);
                    edges.push((i, j, w));
                }
            }
        }
    }
    let mut cross = 0;
    for i in 0..n0 {
        for j in n0..n {
            if rng.gen_bool(p_out) {
                let w = (0.1 + 0.02 * standard_normal(rng)).clamp(0.01, 0.3);
                edges.push((i, j, w));
                cross += 1;
            }
        }
    }
    if cross == 0 && n0 > 0 && n0 < n {
        edges.push((0, n0, 0.1));
    }
    let graph = Graph::new(n, edges)?;
    let pattern = (0..n).map(|i| if i < n0 { 0.0 } else { 5.0 }).collect();
    Ok((graph, pattern))
}

/// Radius graph over uniform points with w = exp(−2d²/r²); components are
/// stitched together through their closest cross pair so the result is
/// always connected. Pattern: 0 on the left half of the square, 5 on the
/// right.
fn random_geometric<R: Rng>(rng: &mut R, n: usize) -> Result<(Graph, Vec<f64>)> {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
    let radius = 1.5 * ((n.max(2) as f64).ln() / (std::f64::consts::PI * n as f64)).sqrt();
    let kernel = |d2: f64| (-2.0 * d2 / (radius * radius)).exp();
    let dist2 = |a: (f64, f64), b: (f64, f64)| {
        let dx = a.0 - b.0;
        let dy = a.1 - b.1;
        dx * dx + dy * dy
    };
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = dist2(pts[i], pts[j]);
            if d2.sqrt() <= radius {
                edges.push((i, j, kernel(d2)));
            }
        }
    }
    // Stitch components deterministically through their closest pairs.
    loop {
        let graph = Graph::new(n, edges.clone())?;
        if graph.is_connected() {
            let pattern = pts.iter().map(|p| if p.0 <= 0.5 { 0.0 } else { 5.0 }).collect();
            return Ok((graph, pattern));
        }
        let labels = component_labels(&graph);
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in (i + 1)..n {
                if labels[i] != labels[j] {
                    let d2 = dist2(pts[i], pts[j]);
                    if best.map_or(true, |(bd, _, _)| d2 < bd) {
                        best = Some((d2, i, j));
                    }
                }
            }
        }
        let (d2, i, j) = best.expect("disconnected graph has a cross pair");
        edges.push((i, j, kernel(d2)));
    }
}

fn component_labels(graph: &Graph) -> Vec<usize> {
    let n = graph.node_count();
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        stack.push(start);
        while let Some(u) = stack.pop() {
            for &(v, _) in graph.neighbors(u) {
                if label[v] == usize::MAX {
                    label[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    label
}

/// ⌈√n⌉-wide lattice with jittered positions, 4-neighbor adjacency, and
/// kernel weights exp(−d²/2). Pattern: 0 on the left half of the columns,
/// 5 on the right.
fn county_grid<R: Rng>(rng: &mut R, n: usize) -> Result<(Graph, Vec<f64>)> {
    let side = (n as f64).sqrt().ceil() as usize;
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|idx| {
            let row = (idx / side) as f64;
            let col = (idx % side) as f64;
            (
                col + rng.gen_range(-0.25..0.25),
                row + rng.gen_range(-0.25..0.25),
            )
        })
        .collect();
    let mut edges = Vec::new();
    for idx in 0..n {
        let col = idx % side;
        if col + 1 < side && idx + 1 < n {
            let dx = pts[idx].0 - pts[idx + 1].0;
            let dy = pts[idx].1 - pts[idx + 1].1;
            edges.push((idx, idx + 1, (-(dx * dx + dy * dy) / 2.0).exp()));
        }
        if idx + side < n {
            let dx = pts[idx].0 - pts[idx + side].0;
            let dy = pts[idx].1 - pts[idx + side].1;
            edges.push((idx, idx + side, (-(dx * dx + dy * dy) / 2.0).exp()));
        }
    }
    let graph = Graph::new(n, edges)?;
    let pattern = (0..n)
        .map(|idx| if idx % side < side / 2 { 0.0 } else { 5.0 })
        .collect();
    Ok((graph, pattern))
}

/// x° = Σ_i α_i v_i over the true spectrum with α_i = ±e^{−3i/N}, α₁ = 0,
/// rescaled to unit RMS. Energies then decay exactly exponentially, matching
/// the surrogate model the μ optimizer fits.
fn low_pass_signal<R: Rng>(graph: &Graph, rng: &mut R) -> Result<Vec<f64>> {
    let n = graph.node_count();
    if n > LOWPASS_NODE_CAP {
        return Err(Error::DimensionMismatch {
            what: "low-pass signal model (dense decomposition cap)",
            expected: LOWPASS_NODE_CAP,
            found: n,
        });
    }
    let mut dense: nalgebra::DMatrix<f64> = nalgebra::DMatrix::zeros(n, n);
    for e in graph.edges() {
        dense[(e.i, e.j)] -= e.weight;
        dense[(e.j, e.i)] -= e.weight;
        dense[(e.i, e.i)] += e.weight;
        dense[(e.j, e.j)] += e.weight;
    }
    let eig = nalgebra::SymmetricEigen::new(dense);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb): (f64, f64) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        ea.partial_cmp(&eb).unwrap()
    });

    let decay = 3.0 / n as f64;
    let mut x = vec![0.0; n];
    for (pos, &col) in order.iter().enumerate() {
        let i = pos + 1; // spectral index, 1-based
        if i == 1 {
            continue;
        }
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let alpha = sign * (-decay * i as f64).exp();
        for (xv, vv) in x.iter_mut().zip(eig.eigenvectors.column(col).iter()) {
            *xv += alpha * vv;
        }
    }
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        for v in x.iter_mut() {
            *v /= rms;
        }
    }
    Ok(x)
}

/// Standard recovery metrics against ground truth. `r2` is `None` when the
/// truth is constant (the definition divides by its spread).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub r2: Option<f64>,
}

pub fn evaluate(truth: &[f64], estimate: &[f64]) -> Result<Metrics> {
    if truth.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            what: "evaluation pair",
            expected: truth.len(),
            found: estimate.len(),
        });
    }
    let n = truth.len() as f64;
    let mut sq = 0.0;
    let mut abs = 0.0;
    for (t, e) in truth.iter().zip(estimate) {
        let d = e - t;
        sq += d * d;
        abs += d.abs();
    }
    let mse = sq / n;
    let mean = truth.iter().sum::<f64>() / n;
    let spread: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    let r2 = if spread > 0.0 { Some(1.0 - sq / spread) } else { None };
    Ok(Metrics {
        mse,
        rmse: mse.sqrt(),
        mae: abs / n,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: GraphFamily, n: usize, sigma: f64, signal: SignalModel, seed: u64) -> SynthSpec {
        SynthSpec {
            family,
            n,
            sigma,
            signal,
            seed,
        }
    }

    #[test]
    fn zero_sigma_returns_truth_exactly() {
        let s = spec(GraphFamily::TwoCluster, 30, 0.0, SignalModel::PiecewiseConstant, 9);
        let inst = generate(&s).unwrap();
        assert_eq!(inst.truth.values(), inst.noisy.values());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let s = spec(GraphFamily::RandomGeometric, 40, 1.3, SignalModel::LowPass, 77);
        let a = generate(&s).unwrap();
        let b = generate(&s).unwrap();
        assert_eq!(a.graph.edge_count(), b.graph.edge_count());
        for (ea, eb) in a.graph.edges().iter().zip(b.graph.edges()) {
            assert_eq!((ea.i, ea.j), (eb.i, eb.j));
            assert_eq!(ea.weight.to_bits(), eb.weight.to_bits());
        }
        for (x, y) in a.noisy.values().iter().zip(b.noisy.values()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn noise_stream_is_independent_of_sigma() {
        let base = spec(GraphFamily::CountyGrid, 36, 0.5, SignalModel::PiecewiseConstant, 5);
        let mut double = base.clone();
        double.sigma = 1.0;
        let a = generate(&base).unwrap();
        let b = generate(&double).unwrap();
        assert_eq!(a.truth.values(), b.truth.values());
        // Noise scales linearly: (y − x) doubles exactly.
        for ((ya, t), yb) in a.noisy.values().iter().zip(a.truth.values()).zip(b.noisy.values()) {
            let na = ya - t;
            let nb = yb - t;
            assert!((nb - 2.0 * na).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_noise_variance_matches_sigma() {
        let s = spec(GraphFamily::TwoCluster, 10_000, 1.5, SignalModel::PiecewiseConstant, 13);
        let inst = generate(&s).unwrap();
        let var: f64 = inst
            .noisy
            .values()
            .iter()
            .zip(inst.truth.values())
            .map(|(y, t)| (y - t) * (y - t))
            .sum::<f64>()
            / 10_000.0;
        assert!((var - 2.25).abs() < 0.05 * 2.25, "sample variance {var}");
    }

    #[test]
    fn generated_graphs_are_connected() {
        for (family, n) in [
            (GraphFamily::TwoCluster, 50),
            (GraphFamily::RandomGeometric, 50),
            (GraphFamily::CountyGrid, 50),
            (GraphFamily::CountyGrid, 37), // partial last row
        ] {
            for seed in 0..5 {
                let inst = generate(&spec(family, n, 0.1, SignalModel::PiecewiseConstant, seed)).unwrap();
                assert!(inst.graph.is_connected(), "{family:?} seed {seed}");
                for e in inst.graph.edges() {
                    assert!(e.weight > 0.0 && e.weight <= 1.0);
                }
            }
        }
    }

    #[test]
    fn low_pass_energies_fit_positive_decay() {
        let s = spec(GraphFamily::RandomGeometric, 60, 0.0, SignalModel::LowPass, 3);
        let inst = generate(&s).unwrap();
        // Dense spectrum of the generated graph.
        let n = inst.graph.node_count();
        let mut dense: nalgebra::DMatrix<f64> = nalgebra::DMatrix::zeros(n, n);
        for e in inst.graph.edges() {
            dense[(e.i, e.j)] -= e.weight;
            dense[(e.j, e.i)] -= e.weight;
            dense[(e.i, e.i)] += e.weight;
            dense[(e.j, e.j)] += e.weight;
        }
        let eig = nalgebra::SymmetricEigen::new(dense);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let project = |col: usize| -> f64 {
            eig.eigenvectors
                .column(col)
                .iter()
                .zip(inst.truth.values())
                .map(|(v, x)| v * x)
                .sum()
        };
        let alpha2 = project(order[1]).powi(2);
        let alpha_n = project(order[n - 1]).powi(2);
        assert!(alpha2 > 0.0 && alpha_n > 0.0);
        let theta = -(alpha_n / alpha2).ln() / (n as f64 - 2.0);
        assert!(theta > 0.0, "fitted decay must be positive, got {theta}");
        // Unit RMS normalization.
        let rms = (inst.truth.values().iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        assert!((rms - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_definitions() {
        let truth = [1.0, 2.0, 3.0, 4.0];
        let m = evaluate(&truth, &truth).unwrap();
        assert_eq!(m.mse, 0.0);
        assert_eq!(m.r2, Some(1.0));

        // Predicting the mean gives R² = 0.
        let mean = [2.5; 4];
        let m = evaluate(&truth, &mean).unwrap();
        assert!((m.r2.unwrap() - 0.0).abs() < 1e-12);

        let m = evaluate(&[7.0; 3], &[7.0, 8.0, 6.0]).unwrap();
        assert_eq!(m.r2, None);

        // Independent recomputation on a random-ish pair.
        let t = [0.4, -1.2, 3.3, 0.0, 2.2];
        let e = [0.1, -1.0, 3.0, 0.5, 2.0];
        let m = evaluate(&t, &e).unwrap();
        let diffs: Vec<f64> = t.iter().zip(&e).map(|(a, b)| b - a).collect();
        let mse = diffs.iter().map(|d| d * d).sum::<f64>() / 5.0;
        let mae = diffs.iter().map(|d| d.abs()).sum::<f64>() / 5.0;
        let tm = t.iter().sum::<f64>() / 5.0;
        let denom = t.iter().map(|v| (v - tm) * (v - tm)).sum::<f64>();
        assert!((m.mse - mse).abs() < 1e-15);
        assert!((m.rmse * m.rmse - m.mse).abs() <= 1e-12);
        assert!((m.mae - mae).abs() < 1e-15);
        assert!((m.r2.unwrap() - (1.0 - mse * 5.0 / denom)).abs() < 1e-12);
    }
}
