//! Command-line definitions and configuration resolution.
//!
//! Precedence for every knob: CLI flag > config file > built-in default.
//! The config file is TOML with one section per concern; the out directory
//! additionally falls back to the `GSDN_OUT_DIR` environment variable.

use clap::{Parser, Subcommand};
use gsdn::denoise::{CgConfig, PipelineConfig};
use gsdn::mu_select::{DcVariance, MuConfig};
use gsdn::noise::NoiseConfig;
use gsdn::synth::{GraphFamily, SignalModel};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "gsdn", version, about = "Unsupervised denoising of signals on similarity graphs")]
pub struct Cli {
    /// TOML config file; CLI flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (default: $GSDN_OUT_DIR or the working directory).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a similarity graph from per-node features.
    BuildGraph(BuildGraphArgs),
    /// Estimate noise variance from a noisy signal by clique detection.
    EstimateNoise(EstimateNoiseArgs),
    /// Compute the MSE-optimal regularization weight for a signal.
    OptimizeMu(OptimizeMuArgs),
    /// Denoise a signal (full unsupervised pipeline, or a fixed μ).
    Denoise(DenoiseArgs),
    /// Run seeded synthetic benchmark trials with known ground truth.
    Bench(BenchArgs),
    /// Print graph statistics and the spectral summary.
    Inspect(InspectArgs),
}

#[derive(clap::Args, Debug)]
pub struct BuildGraphArgs {
    /// Features CSV (header: node_id,<columns...>).
    #[arg(long)]
    pub features: PathBuf,
    /// Metric matrix JSON; identity if neither this nor --learn is given.
    #[arg(long)]
    pub metric: Option<PathBuf>,
    /// Learn a diagonal metric (training signals default to the feature
    /// columns themselves).
    #[arg(long)]
    pub learn: bool,
    /// Training signals CSV for --learn (same layout as a features file).
    #[arg(long)]
    pub training: Option<PathBuf>,
    /// Distance threshold; pairs farther than this get no edge.
    /// Default: the median pairwise distance under the metric in use
    /// (for --learn, distances are median-normalized, so 1.0).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Z-score each feature column first.
    #[arg(long)]
    pub zscore: bool,
    /// Upper bound per learned diagonal entry.
    #[arg(long)]
    pub metric_cap: Option<f64>,
    /// Output graph CSV (default: <out_dir>/graph.csv).
    #[arg(long)]
    pub out_graph: Option<PathBuf>,
    /// Output metric JSON (default: <out_dir>/metric.json).
    #[arg(long)]
    pub out_metric: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct NoiseArgs {
    /// Target average clique size n_c.
    #[arg(long)]
    pub n_c: Option<usize>,
    /// Smallest region size that contributes a variance.
    #[arg(long)]
    pub n_min: Option<usize>,
    /// Largest hop count to try.
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(clap::Args, Debug)]
pub struct EstimateNoiseArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub signal: PathBuf,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Output JSON (default: <out_dir>/noise.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct MuArgs {
    /// Skip clique detection and use this noise variance.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Use raw projection energies instead of σ²-debiased ones.
    #[arg(long)]
    pub raw_energies: bool,
    /// Evaluate the DC variance term with λ₁ = 0 instead of the fitted f(1).
    #[arg(long)]
    pub exact_dc: bool,
}

#[derive(clap::Args, Debug)]
pub struct OptimizeMuArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub signal: PathBuf,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub mu: MuArgs,
    /// Output JSON with the optimizer trace (default: <out_dir>/mu.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub signal: PathBuf,
    /// Fixed μ: skips noise estimation and the μ search entirely.
    #[arg(long)]
    pub mu: Option<f64>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub mu_opts: MuArgs,
    /// CG relative residual tolerance.
    #[arg(long)]
    pub cg_tol: Option<f64>,
    /// CG iteration cap (default 10·N).
    #[arg(long)]
    pub cg_max_iter: Option<usize>,
    /// Output denoised CSV (default: <out_dir>/denoised.csv).
    #[arg(long)]
    pub out_signal: Option<PathBuf>,
    /// Output audit JSON (default: <out_dir>/audit.json).
    #[arg(long)]
    pub out_audit: Option<PathBuf>,
    /// Output (μ, MSEᵃ) curve CSV (default: <out_dir>/mu_curve.csv; written
    /// only when the full pipeline runs).
    #[arg(long)]
    pub out_curve: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct BenchArgs {
    /// Graph family: two-cluster | random-geometric | county-grid.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Signal model: piecewise-constant | low-pass.
    #[arg(long)]
    pub signal_model: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub noise: NoiseArgs,
}

#[derive(clap::Args, Debug)]
pub struct InspectArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Optional signal: adds spectral energies to the summary.
    #[arg(long)]
    pub signal: Option<PathBuf>,
    /// Noise variance used to debias the energies (default 0).
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Write the summary JSON here as well as printing stats.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// The TOML config file. Every field optional; missing values fall through
/// to the built-in defaults.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub spectral: SpectralSection,
    #[serde(default)]
    pub mu: MuSection,
    #[serde(default)]
    pub denoise: DenoiseSection,
    #[serde(default)]
    pub bench: BenchSection,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub threshold: Option<f64>,
    pub zscore: Option<bool>,
    pub learn: Option<bool>,
    pub metric_cap: Option<f64>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub n_c: Option<usize>,
    pub n_min: Option<usize>,
    pub k_max: Option<usize>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub debias: Option<bool>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuSection {
    pub mu0: Option<f64>,
    pub mu_min: Option<f64>,
    pub backtrack: Option<f64>,
    pub armijo: Option<f64>,
    pub grad_tol_factor: Option<f64>,
    pub step_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub step_growth: Option<f64>,
    pub exact_dc: Option<bool>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiseSection {
    pub cg_tol: Option<f64>,
    pub cg_max_iter: Option<usize>,
    pub mu: Option<f64>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub family: Option<String>,
    pub n: Option<usize>,
    pub sigma: Option<f64>,
    pub signal_model: Option<String>,
    pub trials: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, String> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

/// Merge CLI noise flags over the file section and defaults.
pub fn resolve_noise(args: &NoiseArgs, file: &NoiseSection) -> NoiseConfig {
    let d = NoiseConfig::default();
    NoiseConfig {
        n_c: args.n_c.or(file.n_c).unwrap_or(d.n_c),
        n_min: args.n_min.or(file.n_min).unwrap_or(d.n_min),
        k_max: args.k_max.or(file.k_max).unwrap_or(d.k_max),
    }
}

pub fn resolve_mu(args: &MuArgs, file: &MuSection) -> MuConfig {
    let d = MuConfig::default();
    MuConfig {
        mu0: file.mu0.unwrap_or(d.mu0),
        mu_min: file.mu_min.unwrap_or(d.mu_min),
        backtrack: file.backtrack.unwrap_or(d.backtrack),
        armijo: file.armijo.unwrap_or(d.armijo),
        grad_tol_factor: file.grad_tol_factor.unwrap_or(d.grad_tol_factor),
        step_tol: file.step_tol.unwrap_or(d.step_tol),
        max_iter: file.max_iter.unwrap_or(d.max_iter),
        step_growth: file.step_growth.unwrap_or(d.step_growth),
        dc_variance: if args.exact_dc || file.exact_dc.unwrap_or(false) {
            DcVariance::ExactZero
        } else {
            DcVariance::FittedModel
        },
    }
}

pub fn resolve_pipeline(
    noise_args: &NoiseArgs,
    mu_args: &MuArgs,
    cg_tol: Option<f64>,
    cg_max_iter: Option<usize>,
    file: &FileConfig,
) -> PipelineConfig {
    let d = PipelineConfig::default();
    PipelineConfig {
        noise: resolve_noise(noise_args, &file.noise),
        eig_tol: file.spectral.tol.unwrap_or(d.eig_tol),
        eig_max_iter: file.spectral.max_iter.unwrap_or(d.eig_max_iter),
        debias_energies: if mu_args.raw_energies {
            false
        } else {
            file.spectral.debias.unwrap_or(d.debias_energies)
        },
        mu: resolve_mu(mu_args, &file.mu),
        cg: CgConfig {
            tol: cg_tol.or(file.denoise.cg_tol).unwrap_or(d.cg.tol),
            max_iter: cg_max_iter.or(file.denoise.cg_max_iter).or(d.cg.max_iter),
        },
    }
}

pub fn parse_family(name: &str) -> Result<GraphFamily, String> {
    match name {
        "two-cluster" => Ok(GraphFamily::TwoCluster),
        "random-geometric" => Ok(GraphFamily::RandomGeometric),
        "county-grid" => Ok(GraphFamily::CountyGrid),
        other => Err(format!(
            "unknown graph family '{other}' (expected two-cluster, random-geometric, or county-grid)"
        )),
    }
}

pub fn parse_signal_model(name: &str) -> Result<SignalModel, String> {
    match name {
        "piecewise-constant" => Ok(SignalModel::PiecewiseConstant),
        "low-pass" => Ok(SignalModel::LowPass),
        other => Err(format!(
            "unknown signal model '{other}' (expected piecewise-constant or low-pass)"
        )),
    }
}

/// Out-dir precedence: flag > file > $GSDN_OUT_DIR > current directory.
pub fn resolve_out_dir(cli: Option<&Path>, file: Option<&Path>) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    if let Some(p) = file {
        return p.to_path_buf();
    }
    if let Ok(p) = std::env::var("GSDN_OUT_DIR") {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    PathBuf::from(".")
}
