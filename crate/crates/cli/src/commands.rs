//! Command implementations: wire file I/O, config resolution and the library
//! pipeline together, and write reproducible artifacts.

use crate::config::{
    self, BenchArgs, BuildGraphArgs, Cli, Command, DenoiseArgs, EstimateNoiseArgs, FileConfig,
    InspectArgs, OptimizeMuArgs,
};
use gsdn::denoise::{denoise, denoise_pipeline, PipelineConfig};
use gsdn::graph::{Graph, GraphSignal};
use gsdn::io;
use gsdn::metric::{
    build_similarity_graph, learn_metric, median_pairwise_distance, FeatureTable, MetricLearnConfig,
    MetricMatrix, TrainingSignals,
};
use gsdn::mu_select::{fit_exponential_models, mse_approx, optimize_mu};
use gsdn::noise::estimate_noise;
use gsdn::spectral::{extreme_eigenpairs, spectral_energies, SpectralSummary};
use gsdn::synth::{evaluate, generate, SynthSpec};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config values: exit 1.
    Usage(String),
    /// Data or numeric failure from the library: exit 2 or 3 by kind.
    Core(gsdn::Error),
    /// A solver finished without meeting its tolerance: exit 3.
    NonConvergence(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::NonConvergence(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Core(e) => e.source(),
            _ => None,
        }
    }
}

impl From<gsdn::Error> for CliError {
    fn from(e: gsdn::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::NonConvergence(_) => 3,
            CliError::Core(e) => classify(e),
        }
    }
}

fn classify(e: &gsdn::Error) -> i32 {
    use gsdn::Error as E;
    match e {
        E::Stage { source, .. } => classify(source),
        E::EigenNotConverged { .. } | E::OptimizerStalled { .. } => 3,
        E::NonPositive { .. } | E::Negative { .. } => 1,
        _ => 2,
    }
}

type CmdResult = Result<(), CliError>;

/// Reproducibility manifest written next to every command's outputs.
#[derive(Serialize)]
struct Manifest<'a> {
    version: &'a str,
    command: &'a str,
    seed: Option<u64>,
    config: serde_json::Value,
}

fn write_manifest(
    out_dir: &Path,
    command: &str,
    seed: Option<u64>,
    config: serde_json::Value,
) -> CmdResult {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out_dir.display())))?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed,
        config,
    };
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("serializable"))
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn json_of(value: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(value).expect("config serializes")
}

pub fn run(cli: Cli) -> CmdResult {
    let file = FileConfig::load(cli.config.as_deref()).map_err(CliError::Usage)?;
    let out_dir = config::resolve_out_dir(cli.out_dir.as_deref(), file.out_dir.as_deref());
    match cli.command {
        Command::BuildGraph(args) => build_graph(args, &file, &out_dir),
        Command::EstimateNoise(args) => estimate_noise_cmd(args, &file, &out_dir),
        Command::OptimizeMu(args) => optimize_mu_cmd(args, &file, &out_dir),
        Command::Denoise(args) => denoise_cmd(args, &file, &out_dir),
        Command::Bench(args) => bench_cmd(args, &file, &out_dir),
        Command::Inspect(args) => inspect_cmd(args, &file, &out_dir),
    }
}

fn build_graph(args: BuildGraphArgs, file: &FileConfig, out_dir: &Path) -> CmdResult {
    let mut features = io::read_features_csv(&args.features)?;
    let zscore = args.zscore || file.graph.zscore.unwrap_or(false);
    if zscore {
        features = features.zscored();
    }
    let learn = args.learn || file.graph.learn.unwrap_or(false);
    let threshold_flag = args.threshold.or(file.graph.threshold);

    let metric = if learn {
        let training = match &args.training {
            Some(path) => {
                let table = io::read_features_csv(path)?;
                TrainingSignals::new(columns_of(&table))?
            }
            // The feature columns double as training signals.
            None => TrainingSignals::new(columns_of(&features))?,
        };
        // Distances are median-normalized inside learn_metric, so the
        // default frozen-topology threshold is the median itself.
        let threshold = threshold_flag.unwrap_or(1.0);
        let learn_config = MetricLearnConfig {
            entry_cap: args.metric_cap.or(file.graph.metric_cap).unwrap_or(1e4),
            ..MetricLearnConfig::default()
        };
        learn_metric(&features, &training, threshold, &learn_config)?
    } else if let Some(path) = &args.metric {
        io::read_metric_json(path)?
    } else {
        MetricMatrix::identity(features.dim())
    };

    // Final threshold: explicit flag, else the median distance under the
    // metric actually used for edge weights.
    let threshold = match threshold_flag {
        Some(t) if !learn => t,
        _ => median_pairwise_distance(&features, &metric)?,
    };
    let graph = build_similarity_graph(&features, &metric, threshold)?;

    let out_graph = args.out_graph.unwrap_or_else(|| out_dir.join("graph.csv"));
    let out_metric = args.out_metric.unwrap_or_else(|| out_dir.join("metric.json"));
    write_manifest(
        out_dir,
        "build-graph",
        None,
        serde_json::json!({
            "features": args.features,
            "zscore": zscore,
            "learn": learn,
            "threshold": threshold,
        }),
    )?;
    io::write_graph_csv(&out_graph, &graph)?;
    io::write_metric_json(&out_metric, &metric)?;

    let stats = graph.degree_stats();
    println!(
        "nodes: {}  edges: {}  mean degree: {:.4}  components: {}",
        graph.node_count(),
        graph.edge_count(),
        stats.mean_unweighted,
        graph.component_count()
    );
    println!("graph -> {}", out_graph.display());
    println!("metric -> {}", out_metric.display());
    Ok(())
}

/// Feature columns as individual signals.
fn columns_of(table: &FeatureTable) -> Vec<Vec<f64>> {
    (0..table.dim())
        .map(|k| (0..table.len()).map(|i| table.row(i)[k]).collect())
        .collect()
}

fn estimate_noise_cmd(args: EstimateNoiseArgs, file: &FileConfig, out_dir: &Path) -> CmdResult {
    let graph = io::read_graph_csv(&args.graph)?;
    let signal = read_signal_for(&graph, &args.signal)?;
    let noise_config = config::resolve_noise(&args.noise, &file.noise);
    let estimate = estimate_noise(&graph, signal.values(), &noise_config)?;

    write_manifest(out_dir, "estimate-noise", None, json_of(&noise_config))?;
    let out = args.out.unwrap_or_else(|| out_dir.join("noise.json"));
    io::write_noise_json(&out, &estimate)?;
    println!(
        "sigma2: {:.6}  k: {}  w_hat: {:.6}  regions: {} (total mass {})",
        estimate.sigma2,
        estimate.k,
        estimate.w_hat,
        estimate.regions.len(),
        estimate.total_region_mass
    );
    println!("noise estimate -> {}", out.display());
    Ok(())
}

fn optimize_mu_cmd(args: OptimizeMuArgs, file: &FileConfig, out_dir: &Path) -> CmdResult {
    let graph = io::read_graph_csv(&args.graph)?;
    let signal = read_signal_for(&graph, &args.signal)?;
    let pipeline = config::resolve_pipeline(&args.noise, &args.mu, None, None, file);

    let sigma2 = match args.mu.sigma2 {
        Some(s) => s,
        None => estimate_noise(&graph, signal.values(), &pipeline.noise)?.sigma2,
    };
    let summary = SpectralSummary::compute(
        &graph,
        signal.values(),
        sigma2,
        pipeline.eig_tol,
        pipeline.eig_max_iter,
        pipeline.debias_energies,
    )?;
    let fit = fit_exponential_models(&summary, graph.node_count())?;
    let result = optimize_mu(&fit, sigma2, &pipeline.mu)?;

    write_manifest(out_dir, "optimize-mu", None, json_of(&pipeline.mu))?;
    let out = args.out.unwrap_or_else(|| out_dir.join("mu.json"));
    std::fs::write(&out, serde_json::to_string_pretty(&result).expect("serializable"))
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))?;
    println!(
        "mu*: {:.6e}  MSE^a: {:.6e}  iterations: {}  converged: {}",
        result.mu_star, result.mse_at_star, result.iterations, result.converged
    );
    println!("result -> {}", out.display());
    Ok(())
}

/// Audit record for a denoise run. Pipeline fields are absent when a fixed
/// μ skipped them.
#[derive(Serialize)]
struct Audit {
    mu_used: f64,
    cg_residual: f64,
    cg_iterations: usize,
    cg_converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha2_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_n_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mse_at_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_converged: Option<bool>,
}

fn denoise_cmd(args: DenoiseArgs, file: &FileConfig, out_dir: &Path) -> CmdResult {
    let graph = io::read_graph_csv(&args.graph)?;
    let signal = read_signal_for(&graph, &args.signal)?;
    let pipeline = config::resolve_pipeline(
        &args.noise,
        &args.mu_opts,
        args.cg_tol,
        args.cg_max_iter,
        file,
    );
    let mu_override = args.mu.or(file.denoise.mu);

    write_manifest(
        out_dir,
        "denoise",
        None,
        serde_json::json!({
            "mu_override": mu_override,
            "noise": json_of(&pipeline.noise),
            "mu": json_of(&pipeline.mu),
            "cg": json_of(&pipeline.cg),
            "eig_tol": pipeline.eig_tol,
            "debias_energies": pipeline.debias_energies,
        }),
    )?;

    let out_signal = args.out_signal.unwrap_or_else(|| out_dir.join("denoised.csv"));
    let out_audit = args.out_audit.unwrap_or_else(|| out_dir.join("audit.json"));

    let (denoised, audit, curve) = match mu_override {
        Some(mu) => {
            if mu < 0.0 {
                return Err(CliError::Usage(format!("--mu must be >= 0, got {mu}")));
            }
            let result = denoise(&graph, &signal, mu, &pipeline.cg)?;
            let audit = Audit {
                mu_used: result.mu_used,
                cg_residual: result.residual_norm,
                cg_iterations: result.cg_iterations,
                cg_converged: result.converged,
                sigma2: None,
                k: None,
                w_hat: None,
                lambda2: None,
                lambda_n: None,
                alpha2_sq: None,
                alpha_n_sq: None,
                q: None,
                gamma: None,
                r: None,
                theta: None,
                mse_at_star: None,
                mu_converged: None,
            };
            (result, audit, None)
        }
        None => {
            let result = denoise_pipeline(&graph, &signal, &pipeline)?;
            let audit = Audit {
                mu_used: result.denoised.mu_used,
                cg_residual: result.denoised.residual_norm,
                cg_iterations: result.denoised.cg_iterations,
                cg_converged: result.denoised.converged,
                sigma2: Some(result.noise.sigma2),
                k: Some(result.noise.k),
                w_hat: Some(result.noise.w_hat),
                lambda2: Some(result.spectral.lambda2),
                lambda_n: Some(result.spectral.lambda_n),
                alpha2_sq: Some(result.spectral.alpha2_sq),
                alpha_n_sq: Some(result.spectral.alpha_n_sq),
                q: Some(result.fit.q),
                gamma: Some(result.fit.gamma),
                r: Some(result.fit.r),
                theta: Some(result.fit.theta),
                mse_at_star: Some(result.mu.mse_at_star),
                mu_converged: Some(result.mu.converged),
            };
            let curve = mu_curve(&result.fit, result.noise.sigma2, result.mu.mu_star, &pipeline);
            (result.denoised, audit, Some(curve))
        }
    };

    io::write_signal_csv(&out_signal, &denoised.x_star)?;
    std::fs::write(&out_audit, serde_json::to_string_pretty(&audit).expect("serializable"))
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out_audit.display())))?;
    if let Some(curve) = curve {
        let out_curve = args.out_curve.unwrap_or_else(|| out_dir.join("mu_curve.csv"));
        std::fs::write(&out_curve, curve)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out_curve.display())))?;
        println!("mu curve -> {}", out_curve.display());
    }
    println!(
        "mu: {:.6e}  CG iterations: {}  residual: {:.3e}",
        denoised.mu_used, denoised.cg_iterations, denoised.residual_norm
    );
    println!("denoised -> {}", out_signal.display());
    println!("audit -> {}", out_audit.display());

    if !denoised.converged {
        return Err(CliError::NonConvergence(format!(
            "CG stopped at residual {:.3e} (tolerance {:.3e} * ||y||); outputs carry the best iterate",
            denoised.residual_norm, pipeline.cg.tol
        )));
    }
    Ok(())
}

/// 200-point log grid of (μ, MSEᵃ) spanning four decades either side of μ*.
fn mu_curve(
    fit: &gsdn::ExpFitParams,
    sigma2: f64,
    mu_star: f64,
    pipeline: &PipelineConfig,
) -> String {
    let lo = (mu_star * 1e-4).max(pipeline.mu.mu_min);
    let hi = mu_star * 1e4;
    let mut out = String::from("mu,mse_approx\n");
    for t in 0..200 {
        let mu = lo * (hi / lo).powf(t as f64 / 199.0);
        let mse = mse_approx(mu, fit, sigma2, pipeline.mu.dc_variance).expect("mu > 0");
        out.push_str(&format!("{mu},{mse}\n"));
    }
    out
}

#[derive(Serialize)]
struct BenchSummary {
    family: String,
    signal_model: String,
    n: usize,
    sigma: f64,
    trials: usize,
    seed: u64,
    mean_sigma2_hat: f64,
    mean_mu_star: f64,
    mean_mse_noisy: f64,
    mean_mse_denoised: f64,
    improved_fraction: f64,
}

fn bench_cmd(args: BenchArgs, file: &FileConfig, out_dir: &Path) -> CmdResult {
    let family_name = args
        .family
        .or_else(|| file.bench.family.clone())
        .unwrap_or_else(|| "two-cluster".into());
    let family = config::parse_family(&family_name).map_err(CliError::Usage)?;
    let signal_name = args
        .signal_model
        .or_else(|| file.bench.signal_model.clone())
        .unwrap_or_else(|| "piecewise-constant".into());
    let signal_model = config::parse_signal_model(&signal_name).map_err(CliError::Usage)?;
    let n = args.n.or(file.bench.n).unwrap_or(200);
    let sigma = args.sigma.or(file.bench.sigma).unwrap_or(1.0);
    let trials = args.trials.or(file.bench.trials).unwrap_or(20);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let noise_config = config::resolve_noise(&args.noise, &file.noise);
    let pipeline = PipelineConfig {
        noise: noise_config,
        ..PipelineConfig::default()
    };

    write_manifest(
        out_dir,
        "bench",
        Some(seed),
        serde_json::json!({
            "family": family_name,
            "signal_model": signal_name,
            "n": n,
            "sigma": sigma,
            "trials": trials,
            "noise": json_of(&pipeline.noise),
        }),
    )?;

    let mut rows = String::from(
        "trial,seed,sigma2_hat,mu_star,mse_noisy,mse_denoised,rmse_denoised,mae_denoised,r2_denoised,improved\n",
    );
    let mut sum_sigma2 = 0.0;
    let mut sum_mu = 0.0;
    let mut sum_noisy = 0.0;
    let mut sum_denoised = 0.0;
    let mut improved = 0usize;
    for trial in 0..trials {
        let spec = SynthSpec {
            family,
            n,
            sigma,
            signal: signal_model,
            seed: seed.wrapping_add(trial as u64),
        };
        let instance = generate(&spec)?;
        let result = denoise_pipeline(&instance.graph, &instance.noisy, &pipeline)?;
        let noisy_metrics = evaluate(instance.truth.values(), instance.noisy.values())?;
        let denoised_metrics = evaluate(instance.truth.values(), result.denoised.x_star.values())?;
        let win = denoised_metrics.mse < noisy_metrics.mse;
        improved += win as usize;
        sum_sigma2 += result.noise.sigma2;
        sum_mu += result.mu.mu_star;
        sum_noisy += noisy_metrics.mse;
        sum_denoised += denoised_metrics.mse;
        rows.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            trial,
            spec.seed,
            result.noise.sigma2,
            result.mu.mu_star,
            noisy_metrics.mse,
            denoised_metrics.mse,
            denoised_metrics.rmse,
            denoised_metrics.mae,
            denoised_metrics
                .r2
                .map_or("null".to_string(), |v| v.to_string()),
            win
        ));
    }

    let trials_path = out_dir.join("trials.csv");
    std::fs::write(&trials_path, rows)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", trials_path.display())))?;
    let summary = BenchSummary {
        family: family_name,
        signal_model: signal_name,
        n,
        sigma,
        trials,
        seed,
        mean_sigma2_hat: sum_sigma2 / trials.max(1) as f64,
        mean_mu_star: sum_mu / trials.max(1) as f64,
        mean_mse_noisy: sum_noisy / trials.max(1) as f64,
        mean_mse_denoised: sum_denoised / trials.max(1) as f64,
        improved_fraction: improved as f64 / trials.max(1) as f64,
    };
    let summary_path = out_dir.join("summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary).expect("serializable"),
    )
    .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", summary_path.display())))?;

    println!(
        "trials: {}  improved: {}/{}  mean sigma2_hat: {:.4}  mean mu*: {:.4e}",
        trials, improved, trials, summary.mean_sigma2_hat, summary.mean_mu_star
    );
    println!("rows -> {}", trials_path.display());
    println!("summary -> {}", summary_path.display());
    Ok(())
}

fn inspect_cmd(args: InspectArgs, file: &FileConfig, out_dir: &Path) -> CmdResult {
    let graph = io::read_graph_csv(&args.graph)?;
    let stats = graph.degree_stats();
    let components = graph.component_count();
    println!(
        "nodes: {}  edges: {}  mean degree: {:.4}  components: {}",
        graph.node_count(),
        graph.edge_count(),
        stats.mean_unweighted,
        components
    );
    let wmin = stats.weighted.iter().cloned().fold(f64::INFINITY, f64::min);
    let wmax = stats.weighted.iter().cloned().fold(0.0f64, f64::max);
    println!("weighted degree: min {wmin:.4}  max {wmax:.4}");

    if components != 1 {
        println!("graph is disconnected; spectral summary skipped");
        return Ok(());
    }
    let eig_tol = file.spectral.tol.unwrap_or(gsdn::spectral::DEFAULT_EIG_TOL);
    let eig_iter = file
        .spectral
        .max_iter
        .unwrap_or(gsdn::spectral::DEFAULT_EIG_MAX_ITER);
    let pairs = extreme_eigenpairs(&graph, eig_tol, eig_iter)?;
    println!("lambda2: {:.6e}  lambdaN: {:.6e}", pairs.lambda2, pairs.lambda_n);

    let summary = if let Some(signal_path) = &args.signal {
        let signal = read_signal_for(&graph, signal_path)?;
        let sigma2 = args.sigma2.unwrap_or(0.0);
        let (a2, an) = spectral_energies(
            signal.values(),
            &pairs.v2,
            &pairs.v_n,
            sigma2,
            file.spectral.debias.unwrap_or(true),
        )?;
        println!("alpha2^2: {a2:.6e}  alphaN^2: {an:.6e}");
        SpectralSummary {
            lambda2: pairs.lambda2,
            lambda_n: pairs.lambda_n,
            alpha2_sq: a2,
            alpha_n_sq: an,
            v2: pairs.v2,
            v_n: pairs.v_n,
        }
    } else {
        SpectralSummary {
            lambda2: pairs.lambda2,
            lambda_n: pairs.lambda_n,
            alpha2_sq: 0.0,
            alpha_n_sq: 0.0,
            v2: pairs.v2,
            v_n: pairs.v_n,
        }
    };
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out_dir).ok();
        std::fs::write(out, serde_json::to_string_pretty(&summary).expect("serializable"))
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))?;
        println!("summary -> {}", out.display());
    }
    Ok(())
}

/// Read a signal and check it against the graph's node count, naming both
/// sizes on mismatch.
fn read_signal_for(graph: &Graph, path: &PathBuf) -> Result<GraphSignal, CliError> {
    let signal = io::read_signal_csv(path)?;
    if signal.len() != graph.node_count() {
        return Err(CliError::Core(gsdn::Error::DimensionMismatch {
            what: "signal file vs graph",
            expected: graph.node_count(),
            found: signal.len(),
        }));
    }
    Ok(signal)
}
