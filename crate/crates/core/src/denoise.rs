//! MAP denoising: solve min_x ‖y − x‖² + μ·xᵀLx, i.e. the SPD linear system
//! (I + μL)x = y, by conjugate gradient with the sparse Laplacian matvec.

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSignal};
use crate::mu_select::{fit_exponential_models, optimize_mu, ExpFitParams, MuConfig, MuResult};
use crate::noise::{estimate_noise, NoiseConfig, NoiseEstimate};
use crate::spectral::SpectralSummary;
use serde::{Deserialize, Serialize};

/// Conjugate-gradient settings. `max_iter = None` means 10·N.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CgConfig {
    /// Relative residual target: ‖(I + μL)x − y‖ ≤ tol·‖y‖.
    pub tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            tol: 1e-9,
            max_iter: None,
        }
    }
}

/// Denoised signal with solver diagnostics. When `converged` is false,
/// `x_star` is the best (smallest-residual) iterate seen.
#[derive(Debug, Clone)]
pub struct DenoiseResult {
    pub x_star: GraphSignal,
    pub residual_norm: f64,
    pub cg_iterations: usize,
    pub mu_used: f64,
    pub converged: bool,
}

/// Solve (I + μL)x = y. The system is symmetric positive definite for
/// μ ≥ 0 (smallest eigenvalue exactly 1), so CG converges and the error
/// norm is bounded by the residual norm. Warm-starts at x = y, which is
/// exact for μ = 0.
pub fn denoise(graph: &Graph, y: &GraphSignal, mu: f64, config: &CgConfig) -> Result<DenoiseResult> {
    if y.len() != graph.node_count() {
        return Err(Error::DimensionMismatch {
            what: "signal",
            expected: graph.node_count(),
            found: y.len(),
        });
    }
    if mu < 0.0 {
        return Err(Error::Negative {
            what: "mu",
            value: mu,
        });
    }
    let n = graph.node_count();
    let lap = graph.laplacian();
    let max_iter = config.max_iter.unwrap_or(10 * n);
    let y = y.values();
    let y_norm = norm(y);
    let target = config.tol * y_norm;

    let apply = |v: &[f64], lbuf: &mut [f64], out: &mut [f64]| {
        lap.matvec_into(v, lbuf);
        for ((o, &vi), &li) in out.iter_mut().zip(v).zip(lbuf.iter()) {
            *o = vi + mu * li;
        }
    };

    let mut x: Vec<f64> = y.to_vec();
    let mut lbuf = vec![0.0; n];
    let mut ax = vec![0.0; n];
    apply(&x, &mut lbuf, &mut ax);
    let mut r: Vec<f64> = y.iter().zip(&ax).map(|(a, b)| a - b).collect();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);

    let mut best = x.clone();
    let mut best_res = rs.sqrt();
    let mut iterations = 0;

    while best_res > target && iterations < max_iter {
        apply(&p, &mut lbuf, &mut ax);
        let denom = dot(&p, &ax);
        if denom <= 0.0 {
            break; // numerically lost positive-definiteness; keep best iterate
        }
        let alpha = rs / denom;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(ax.iter())) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        let rs_new = dot(&r, &r);
        iterations += 1;
        if rs_new.sqrt() < best_res {
            best_res = rs_new.sqrt();
            best.copy_from_slice(&x);
        }
        let beta = rs_new / rs;
        rs = rs_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }

    // True residual of the best iterate, free of recurrence drift.
    apply(&best, &mut lbuf, &mut ax);
    let residual_norm = y
        .iter()
        .zip(&ax)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let converged = residual_norm <= target;
    Ok(DenoiseResult {
        x_star: GraphSignal::new(best)?,
        residual_norm,
        cg_iterations: iterations,
        mu_used: mu,
        converged,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Everything the full unsupervised chain needs in one place.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub noise: NoiseConfig,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    /// Subtract σ² from the raw projection energies (see
    /// [`crate::spectral::spectral_energies`]).
    pub debias_energies: bool,
    pub mu: MuConfig,
    pub cg: CgConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            noise: NoiseConfig::default(),
            eig_tol: crate::spectral::DEFAULT_EIG_TOL,
            eig_max_iter: crate::spectral::DEFAULT_EIG_MAX_ITER,
            debias_energies: true,
            mu: MuConfig::default(),
            cg: CgConfig::default(),
        }
    }
}

/// All intermediate artifacts of a pipeline run, for auditability.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub denoised: DenoiseResult,
    pub noise: NoiseEstimate,
    pub spectral: SpectralSummary,
    pub fit: ExpFitParams,
    pub mu: MuResult,
}

/// The full unsupervised chain on a connected similarity graph:
/// noise estimation → extreme eigenpairs → spectral energies → exponential
/// fit → μ descent → CG denoise. Errors carry the failing stage's label.
pub fn denoise_pipeline(
    graph: &Graph,
    y: &GraphSignal,
    config: &PipelineConfig,
) -> Result<PipelineResult> {
    let noise = estimate_noise(graph, y.values(), &config.noise)
        .map_err(|e| e.in_stage("noise-estimation"))?;
    let spectral = SpectralSummary::compute(
        graph,
        y.values(),
        noise.sigma2,
        config.eig_tol,
        config.eig_max_iter,
        config.debias_energies,
    )
    .map_err(|e| e.in_stage("spectral"))?;
    let fit = fit_exponential_models(&spectral, graph.node_count())
        .map_err(|e| e.in_stage("model-fit"))?;
    let mu = optimize_mu(&fit, noise.sigma2, &config.mu).map_err(|e| e.in_stage("mu-descent"))?;
    let denoised =
        denoise(graph, y, mu.mu_star, &config.cg).map_err(|e| e.in_stage("cg-solve"))?;
    Ok(PipelineResult {
        denoised,
        noise,
        spectral,
        fit,
        mu,
    })
}
