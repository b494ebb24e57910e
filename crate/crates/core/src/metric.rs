//! Similarity-graph construction from per-node feature vectors.
//!
//! Edge weights are w_{ij} = exp(−d_{ij}) with the squared Mahalanobis
//! feature distance d_{ij} = (f_i − f_j)ᵀ M (f_i − f_j); pairs whose distance
//! exceeds a threshold get no edge. The metric M can optionally be learned
//! from training signals by minimizing the summed GLR Σ_t x_tᵀ L(M) x_t over
//! diagonal PSD metrics.

use crate::error::{Error, Result};
use crate::graph::Graph;
use serde::{Deserialize, Serialize};

/// Distances below this magnitude that come out slightly negative are
/// attributed to round-off and clamped to zero; anything more negative means
/// the metric is not PSD.
pub const PSD_SLACK: f64 = 1e-10;

/// Per-node feature vectors: N rows of uniform dimension K.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    n: usize,
    dim: usize,
    /// Row-major, `n * dim` entries, all finite.
    data: Vec<f64>,
}

impl FeatureTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let dim = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "feature row",
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "feature table" });
            }
            data.extend_from_slice(row);
        }
        Ok(FeatureTable { n, dim, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Per-column z-score normalization. Columns with zero spread are only
    /// centered.
    pub fn zscored(&self) -> FeatureTable {
        let mut out = self.clone();
        for k in 0..self.dim {
            let mean = (0..self.n).map(|i| self.row(i)[k]).sum::<f64>() / self.n as f64;
            let var = (0..self.n)
                .map(|i| {
                    let d = self.row(i)[k] - mean;
                    d * d
                })
                .sum::<f64>()
                / self.n as f64;
            let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
            for i in 0..self.n {
                out.data[i * self.dim + k] = (self.row(i)[k] - mean) / scale;
            }
        }
        out
    }
}

/// Symmetric PSD K×K metric matrix defining the squared Mahalanobis distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricMatrix {
    dim: usize,
    /// Row-major, `dim * dim` entries.
    data: Vec<f64>,
}

impl MetricMatrix {
    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        let mut data = vec![0.0; dim * dim];
        for k in 0..dim {
            data[k * dim + k] = c;
        }
        MetricMatrix { dim, data }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let dim = entries.len();
        let mut data = vec![0.0; dim * dim];
        for (k, &v) in entries.iter().enumerate() {
            data[k * dim + k] = v;
        }
        MetricMatrix { dim, data }
    }

    /// Validates symmetry (to 1e−12 relative) and positive semi-definiteness
    /// (smallest eigenvalue ≥ −1e−10, checked on the symmetrized matrix).
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                what: "metric matrix data",
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "metric matrix" });
        }
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for a in 0..dim {
            for b in (a + 1)..dim {
                let diff = (data[a * dim + b] - data[b * dim + a]).abs();
                if diff > 1e-12 * scale {
                    return Err(Error::MetricNotPsd {
                        detail: format!("asymmetric at ({a}, {b}): difference {diff:e}"),
                    });
                }
            }
        }
        let m = nalgebra::DMatrix::from_row_slice(dim, dim, &data);
        let sym = (&m + m.transpose()) * 0.5;
        let min_eig = sym
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_SLACK * scale {
            return Err(Error::MetricNotPsd {
                detail: format!("smallest eigenvalue {min_eig:e}"),
            });
        }
        Ok(MetricMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.dim + b]
    }

    /// Diagonal entries (the full matrix for metrics produced by
    /// [`learn_metric`]).
    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim).map(|k| self.get(k, k)).collect()
    }
}

/// Raw shape used for the JSON interchange format; validated on the way in.
#[derive(Debug, Serialize, Deserialize)]
pub struct MetricMatrixJson {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl TryFrom<MetricMatrixJson> for MetricMatrix {
    type Error = Error;
    fn try_from(raw: MetricMatrixJson) -> Result<MetricMatrix> {
        MetricMatrix::from_row_major(raw.dim, raw.data)
    }
}

/// Training signals for metric learning: T signals of a common length N.
#[derive(Debug, Clone)]
pub struct TrainingSignals {
    n: usize,
    signals: Vec<Vec<f64>>,
}

impl TrainingSignals {
    pub fn new(signals: Vec<Vec<f64>>) -> Result<Self> {
        if signals.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "training signal count (T >= 1 required)",
                expected: 1,
                found: 0,
            });
        }
        let n = signals[0].len();
        for s in &signals {
            if s.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "training signal",
                    expected: n,
                    found: s.len(),
                });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "training signal" });
            }
        }
        Ok(TrainingSignals { n, signals })
    }

    pub fn signal_len(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.signals.len()
    }

    pub fn signals(&self) -> &[Vec<f64>] {
        &self.signals
    }
}

/// Squared Mahalanobis distance (f_a − f_b)ᵀ M (f_a − f_b).
///
/// Tiny negative values within round-off are clamped to 0; anything below
/// −1e−10 (scaled) reports the metric as not PSD.
pub fn mahalanobis_distance(f_a: &[f64], f_b: &[f64], m: &MetricMatrix) -> Result<f64> {
    if f_a.len() != f_b.len() {
        return Err(Error::DimensionMismatch {
            what: "feature vector pair",
            expected: f_a.len(),
            found: f_b.len(),
        });
    }
    if f_a.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            what: "feature vector vs metric",
            expected: m.dim(),
            found: f_a.len(),
        });
    }
    let dim = m.dim();
    let mut d = 0.0;
    for a in 0..dim {
        let da = f_a[a] - f_b[a];
        if da == 0.0 {
            continue;
        }
        let mut row_acc = 0.0;
        for b in 0..dim {
            row_acc += m.get(a, b) * (f_a[b] - f_b[b]);
        }
        d += da * row_acc;
    }
    let scale = f_a
        .iter()
        .zip(f_b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .max(1.0);
    if d < -PSD_SLACK * scale {
        return Err(Error::MetricNotPsd {
            detail: format!("quadratic form evaluated to {d:e}"),
        });
    }
    Ok(d.max(0.0))
}

/// Median of all pairwise squared Mahalanobis distances. The default
/// distance threshold when none is configured.
pub fn median_pairwise_distance(features: &FeatureTable, m: &MetricMatrix) -> Result<f64> {
    let n = features.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(mahalanobis_distance(features.row(i), features.row(j), m)?);
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if dists.is_empty() {
        return Err(Error::DimensionMismatch {
            what: "feature table (need N >= 2)",
            expected: 2,
            found: n,
        });
    }
    let mid = dists.len() / 2;
    Ok(if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    })
}

/// Build the similarity graph: every pair with d_{ij} ≤ `distance_threshold`
/// gets an edge of weight exp(−d_{ij}) ∈ (0, 1].
///
/// Pairs whose weight would underflow to exactly 0 are treated as beyond the
/// threshold. The result may be disconnected; callers decide whether that is
/// acceptable. A graph with no edges at all is an error reporting the
/// smallest observed distance.
pub fn build_similarity_graph(
    features: &FeatureTable,
    m: &MetricMatrix,
    distance_threshold: f64,
) -> Result<Graph> {
    let n = features.len();
    if n < 2 {
        return Err(Error::DimensionMismatch {
            what: "feature table (need N >= 2)",
            expected: 2,
            found: n,
        });
    }
    if !(distance_threshold > 0.0) {
        return Err(Error::NonPositive {
            what: "distance threshold",
            value: distance_threshold,
        });
    }
    let mut edges = Vec::new();
    let mut min_distance = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = mahalanobis_distance(features.row(i), features.row(j), m)?;
            min_distance = min_distance.min(d);
            if d <= distance_threshold {
                let w = (-d).exp();
                if w > 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
    }
    if edges.is_empty() {
        return Err(Error::EmptyGraph {
            min_distance,
            threshold: distance_threshold,
        });
    }
    Graph::new(n, edges)
}

/// Settings for the diagonal metric optimizer.
#[derive(Debug, Clone)]
pub struct MetricLearnConfig {
    pub max_iter: usize,
    /// Stop when the sup-norm of the gradient falls below
    /// `grad_tol * max(1, initial objective)`.
    pub grad_tol: f64,
    /// Upper bound applied to each diagonal entry after every step. The GLR
    /// objective is monotone decreasing in every entry, so without a cap the
    /// optimizer runs until the iteration budget; cap it to keep the learned
    /// metric on the scale of the data.
    pub entry_cap: f64,
    /// Step growth factor after an accepted step.
    pub step_growth: f64,
    /// Abort the line search once the trial step falls below this.
    pub min_step: f64,
}

impl Default for MetricLearnConfig {
    fn default() -> Self {
        MetricLearnConfig {
            max_iter: 200,
            grad_tol: 1e-12,
            entry_cap: f64::INFINITY,
            step_growth: 2.0,
            min_step: 1e-18,
        }
    }
}

/// Learn a diagonal PSD metric by projected gradient descent on
/// f(M) = Σ_t x_tᵀ L(M) x_t.
///
/// The initial metric is the identity scaled so the median pairwise distance
/// equals 1, and the graph topology is frozen from that initial metric (only
/// weights change during optimization); re-thresholding is the caller's move
/// after convergence. The returned metric never has a larger objective than
/// the initial one.
pub fn learn_metric(
    features: &FeatureTable,
    training: &TrainingSignals,
    distance_threshold: f64,
    config: &MetricLearnConfig,
) -> Result<MetricMatrix> {
    let n = features.len();
    if training.signal_len() != n {
        return Err(Error::DimensionMismatch {
            what: "training signal vs feature table",
            expected: n,
            found: training.signal_len(),
        });
    }
    let dim = features.dim();

    // Scale the identity so the median pairwise distance is 1.
    let med = median_pairwise_distance(features, &MetricMatrix::identity(dim))?;
    let init_scale = if med > 0.0 { 1.0 / med } else { 1.0 };
    let init = vec![init_scale; dim];

    // Freeze the topology from the initial metric.
    let m0 = MetricMatrix::diagonal(&init);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = mahalanobis_distance(features.row(i), features.row(j), &m0)?;
            if d <= distance_threshold {
                pairs.push((i, j));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyGraph {
            min_distance: f64::INFINITY,
            threshold: distance_threshold,
        });
    }

    // Per edge: squared feature gaps per dimension, and the training cost
    // Σ_t (x_ti − x_tj)². Objective = Σ_e cost_e · exp(−Σ_k m_k gap_ek).
    let gaps: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(i, j)| {
            (0..dim)
                .map(|k| {
                    let d = features.row(i)[k] - features.row(j)[k];
                    d * d
                })
                .collect()
        })
        .collect();
    let costs: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| {
            training
                .signals()
                .iter()
                .map(|x| {
                    let d = x[i] - x[j];
                    d * d
                })
                .sum()
        })
        .collect();

    let objective = |m: &[f64]| -> f64 {
        gaps.iter()
            .zip(&costs)
            .map(|(g, c)| {
                let d: f64 = g.iter().zip(m).map(|(gk, mk)| gk * mk).sum();
                c * (-d).exp()
            })
            .sum()
    };
    let gradient = |m: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (g, c) in gaps.iter().zip(&costs) {
            let d: f64 = g.iter().zip(m).map(|(gk, mk)| gk * mk).sum();
            let w = c * (-d).exp();
            for (o, gk) in out.iter_mut().zip(g) {
                *o -= w * gk;
            }
        }
    };

    let mut m = init;
    let mut obj = objective(&m);
    let obj_scale = obj.max(1.0);
    let mut grad = vec![0.0; dim];
    // Step length in metric-entry units of the steepest coordinate; the
    // direction is the sup-norm-normalized projected gradient, so movement
    // does not throttle as the exponential weights (and with them the raw
    // gradient) decay.
    let mut step = 0.5;

    for _ in 0..config.max_iter {
        gradient(&m, &mut grad);
        // Projected gradient: mask components pushing outside [0, cap].
        for (gk, mk) in grad.iter_mut().zip(&m) {
            let pinned_low = *mk <= 0.0 && *gk > 0.0;
            let pinned_high = *mk >= config.entry_cap && *gk < 0.0;
            if pinned_low || pinned_high {
                *gk = 0.0;
            }
        }
        let gmax = grad.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
        if gmax <= config.grad_tol * obj_scale {
            return Ok(MetricMatrix::diagonal(&m));
        }
        let mut accepted = false;
        let mut plateau = false;
        while step >= config.min_step {
            let trial: Vec<f64> = m
                .iter()
                .zip(&grad)
                .map(|(mk, gk)| (mk - step * gk / gmax).clamp(0.0, config.entry_cap))
                .collect();
            if trial == m {
                // Step below the float resolution of the iterate.
                return Ok(MetricMatrix::diagonal(&m));
            }
            let trial_obj = objective(&trial);
            if trial_obj < obj {
                m = trial;
                obj = trial_obj;
                step *= config.step_growth;
                accepted = true;
                break;
            }
            if trial_obj <= obj * (1.0 + 1e-14) {
                // Flat to float resolution; not an increase.
                plateau = true;
            }
            step *= 0.5;
        }
        if !accepted {
            if plateau {
                // Objective improvements fell below float resolution.
                return Ok(MetricMatrix::diagonal(&m));
            }
            // Every trial step increased the objective.
            return Err(Error::OptimizerStalled {
                best: MetricMatrix::diagonal(&m),
                objective: obj,
            });
        }
    }
    Ok(MetricMatrix::diagonal(&m))
}

/// Objective value Σ_t x_tᵀ L(M) x_t on the graph built from `features`,
/// `m`, `threshold`. Exposed for diagnostics and tests.
pub fn metric_objective(
    features: &FeatureTable,
    training: &TrainingSignals,
    m: &MetricMatrix,
    distance_threshold: f64,
) -> Result<f64> {
    let n = features.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = mahalanobis_distance(features.row(i), features.row(j), m)?;
            if d <= distance_threshold {
                let w = (-d).exp();
                for x in training.signals() {
                    let diff = x[i] - x[j];
                    total += w * diff * diff;
                }
            }
        }
    }
    Ok(total)
}
