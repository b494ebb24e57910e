//! End-to-end tests of the `gsdn` binary: file formats, config precedence,
//! exit codes, and run-to-run reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gsdn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsdn"))
        .args(args)
        .current_dir(dir)
        .env_remove("GSDN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn build_graph_identical_rows_gives_complete_unit_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let features = write(
        dir.path(),
        "f.csv",
        "node_id,a,b\n1,2.0,3.0\n2,2.0,3.0\n3,2.0,3.0\n",
    );
    let out = gsdn(
        &["--out-dir", "o", "build-graph", "--features", &features, "--threshold", "1.0"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let graph = fs::read_to_string(dir.path().join("o/graph.csv")).unwrap();
    assert_eq!(graph, "i,j,w\n1,2,1\n1,3,1\n2,3,1\n");
    assert!(stdout(&out).contains("edges: 3"));
}

#[test]
fn build_graph_matches_all_pairs_oracle() {
    let dir = tempfile::tempdir().unwrap();
    // 20 deterministic rows, identity metric.
    let mut body = String::from("node_id,x,y\n");
    let mut rows = Vec::new();
    for i in 0..20usize {
        let x = (i as f64 * 0.37).sin();
        let y = (i as f64 * 0.61).cos();
        rows.push((x, y));
        body.push_str(&format!("{},{},{}\n", i + 1, x, y));
    }
    let features = write(dir.path(), "f.csv", &body);
    let threshold = 0.8;
    let out = gsdn(
        &[
            "--out-dir",
            "o",
            "build-graph",
            "--features",
            &features,
            "--threshold",
            "0.8",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));

    let mut expected = Vec::new();
    for i in 0..20 {
        for j in (i + 1)..20 {
            let d = (rows[i].0 - rows[j].0).powi(2) + (rows[i].1 - rows[j].1).powi(2);
            if d <= threshold {
                expected.push(format!("{},{},{}", i + 1, j + 1, (-d).exp()));
            }
        }
    }
    let graph = fs::read_to_string(dir.path().join("o/graph.csv")).unwrap();
    let got: Vec<&str> = graph.lines().skip(1).collect();
    assert_eq!(got.len(), expected.len());
    for (g, e) in got.iter().zip(&expected) {
        assert_eq!(g, e);
    }
}

#[test]
fn build_graph_reports_row_and_column_of_bad_cell() {
    let dir = tempfile::tempdir().unwrap();
    let features = write(dir.path(), "f.csv", "node_id,a\n1,1.0\n2,oops\n");
    let out = gsdn(
        &["--out-dir", "o", "build-graph", "--features", &features],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("row 3"), "{err}");
    assert!(err.contains("column 2"), "{err}");
}

fn fixture_graph_and_signal(dir: &Path) -> (String, String) {
    // Two strong 4-cliques bridged weakly; signal constant per clique plus
    // a small ripple.
    let mut graph = String::from("i,j,w\n");
    for base in [0usize, 4] {
        for a in 0..4 {
            for b in (a + 1)..4 {
                graph.push_str(&format!("{},{},0.9\n", base + a + 1, base + b + 1));
            }
        }
    }
    graph.push_str("1,5,0.2\n4,8,0.2\n");
    let mut signal = String::from("node_id,value\n");
    for i in 0..8 {
        let v = if i < 4 { 1.0 } else { 6.0 } + 0.01 * (i as f64);
        signal.push_str(&format!("{},{}\n", i + 1, v));
    }
    (
        write(dir, "g.csv", &graph),
        write(dir, "y.csv", &signal),
    )
}

#[test]
fn denoise_with_zero_mu_is_value_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (graph, signal) = fixture_graph_and_signal(dir.path());
    let out = gsdn(
        &[
            "--out-dir", "o", "denoise", "--graph", &graph, "--signal", &signal, "--mu", "0",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let input = fs::read_to_string(dir.path().join("y.csv")).unwrap();
    let output = fs::read_to_string(dir.path().join("o/denoised.csv")).unwrap();
    let parse = |s: &str| -> Vec<f64> {
        s.lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    assert_eq!(parse(&input), parse(&output));
}

#[test]
fn denoise_length_mismatch_names_both_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let (graph, _) = fixture_graph_and_signal(dir.path());
    let short = write(dir.path(), "short.csv", "node_id,value\n1,1.0\n2,2.0\n");
    let out = gsdn(
        &["--out-dir", "o", "denoise", "--graph", &graph, "--signal", &short],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("expected 8") && err.contains("found 2"), "{err}");
}

#[test]
fn denoise_audit_matches_library_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (graph_path, signal_path) = fixture_graph_and_signal(dir.path());
    let out = gsdn(
        &[
            "--out-dir", "o", "denoise", "--graph", &graph_path, "--signal", &signal_path,
            "--n-c", "2",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let audit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/audit.json")).unwrap()).unwrap();

    // Library-level run with the same knobs.
    let graph = gsdn::io::read_graph_csv(&graph_path).unwrap();
    let signal = gsdn::io::read_signal_csv(&signal_path).unwrap();
    let config = gsdn::denoise::PipelineConfig {
        noise: gsdn::noise::NoiseConfig {
            n_c: 2,
            ..Default::default()
        },
        ..Default::default()
    };
    let result = gsdn::denoise::denoise_pipeline(&graph, &signal, &config).unwrap();
    assert_eq!(audit["mu_used"].as_f64().unwrap(), result.mu.mu_star);
    assert_eq!(audit["sigma2"].as_f64().unwrap(), result.noise.sigma2);
}

#[test]
fn disconnected_graph_error_suggests_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(
        dir.path(),
        "g.csv",
        "i,j,w\n1,2,0.9\n1,3,0.8\n2,3,0.7\n4,5,0.9\n4,6,0.8\n5,6,0.7\n",
    );
    let signal = write(
        dir.path(),
        "y.csv",
        "node_id,value\n1,1\n2,2\n3,3\n4,4\n5,5\n6,6\n",
    );
    let out = gsdn(
        &["--out-dir", "o", "denoise", "--graph", &graph, "--signal", &signal, "--n-c", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("threshold"), "{}", stderr(&out));
}

#[test]
fn cg_starvation_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let (graph, signal) = fixture_graph_and_signal(dir.path());
    let out = gsdn(
        &[
            "--out-dir", "o", "denoise", "--graph", &graph, "--signal", &signal,
            "--mu", "50", "--cg-max-iter", "1", "--cg-tol", "1e-12",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    // Outputs still written with the best iterate.
    assert!(dir.path().join("o/denoised.csv").exists());
}

#[test]
fn bench_zero_sigma_single_trial_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = gsdn(
        &[
            "--out-dir", "b", "bench", "--family", "two-cluster", "--n", "40",
            "--sigma", "0", "--signal-model", "piecewise-constant", "--trials", "1",
            "--seed", "5",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["mean_mse_noisy"].as_f64().unwrap(), 0.0);
    // σ = 0 ⇒ σ̂² = 0 ⇒ μ* floors ⇒ denoised ≈ input exactly.
    assert!(summary["mean_mse_denoised"].as_f64().unwrap() < 1e-12);
}

#[test]
fn bench_rejects_unknown_family_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = gsdn(&["bench", "--family", "mystery"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown graph family"));
}

#[test]
fn config_file_applies_and_cli_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "gsdn.toml",
        "[bench]\nfamily = \"county-grid\"\nn = 36\nsigma = 0.0\ntrials = 2\nsignal_model = \"piecewise-constant\"\n",
    );
    // File alone.
    let out = gsdn(
        &["--config", &config, "--out-dir", "a", "bench", "--seed", "1"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["family"], "county-grid");
    assert_eq!(summary["n"], 36);
    assert_eq!(summary["trials"], 2);

    // CLI flag wins over the file.
    let out = gsdn(
        &[
            "--config", &config, "--out-dir", "b", "bench", "--seed", "1", "--n", "25",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["n"], 25);
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "bad.toml", "[bench]\nfamly = \"x\"\n");
    let out = gsdn(&["--config", &config, "bench"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("invalid config"));
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let (graph, signal) = fixture_graph_and_signal(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_gsdn"))
        .args(["estimate-noise", "--graph", &graph, "--signal", &signal, "--n-c", "2"])
        .current_dir(dir.path())
        .env("GSDN_OUT_DIR", "env_out")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("env_out/noise.json").exists());
    assert!(dir.path().join("env_out/manifest.json").exists());
}

#[test]
fn inspect_prints_stats_and_spectral_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (graph, signal) = fixture_graph_and_signal(dir.path());
    let out = gsdn(
        &["--out-dir", "o", "inspect", "--graph", &graph, "--signal", &signal, "--out", "o/summary.json"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("nodes: 8"));
    assert!(text.contains("lambda2"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/summary.json")).unwrap())
            .unwrap();
    assert!(summary["lambda_n"].as_f64().unwrap() > 0.0);
    assert_eq!(summary["v2"].as_array().unwrap().len(), 8);
}
