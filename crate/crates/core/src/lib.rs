//! Fully unsupervised denoising of signals that live on similarity graphs.
//!
//! The pipeline, end to end:
//!
//! 1. [`metric`] — build the similarity graph from per-node feature vectors
//!    with a Mahalanobis metric (optionally learned from training signals).
//! 2. [`noise`] — estimate the noise variance σ² directly from the noisy
//!    signal by detecting locally constant regions as maximal cliques of a
//!    thresholded, hop-expanded graph.
//! 3. [`spectral`] — extreme Laplacian eigenpairs (λ₂, v₂), (λ_N, v_N) and
//!    plug-in spectral energies.
//! 4. [`mu_select`] — fit exponential spectral models and descend the
//!    pseudo-convex approximate MSE to get the regularization weight μ*.
//! 5. [`denoise`] — solve (I + μL)x = y by conjugate gradient.
//!
//! [`synth`] generates seeded synthetic instances with known ground truth for
//! benchmarking, and [`io`] covers the CSV/JSON interchange formats.

pub mod denoise;
pub mod error;
pub mod graph;
pub mod io;
pub mod metric;
pub mod mu_select;
pub mod noise;
pub mod spectral;
pub mod synth;

mod cliques;

#[cfg(test)]
mod testutil;

pub use cliques::maximal_cliques;
pub use denoise::{denoise, denoise_pipeline, DenoiseResult, PipelineConfig, PipelineResult};
pub use error::{Error, Result};
pub use graph::{DegreeStats, Edge, Graph, GraphSignal, LaplacianOperator};
pub use metric::{FeatureTable, MetricMatrix, TrainingSignals};
pub use mu_select::{ExpFitParams, MuConfig, MuResult};
pub use noise::{estimate_noise, KcgResult, NoiseConfig, NoiseEstimate, Region};
pub use spectral::{extreme_eigenpairs, ExtremePairs, SpectralSummary};
pub use synth::{GraphFamily, SignalModel, SynthInstance, SynthSpec};
