//! End-to-end tests of the command-line surface: every subcommand is run
//! as a real subprocess and judged on its exit code, stdout, and the
//! artifacts it writes.

use std::fs;
use std::path::{Path, PathBuf};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fyvi")
}

/// Runs the binary with `args`; returns (exit code, stdout, stderr).
fn run(args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(bin())
        .args(args)
        .output()
        .expect("binary spawns");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("stdout is UTF-8"),
        String::from_utf8(out.stderr).expect("stderr is UTF-8"),
    )
}

/// Runs the binary with `--out out_dir` prepended.
fn run_in(out_dir: &Path, args: &[&str]) -> (i32, String, String) {
    let mut full = vec!["--out", out_dir.to_str().expect("UTF-8 path")];
    full.extend_from_slice(args);
    run(&full)
}

/// Fresh per-test scratch directory under the system temp root.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fyvi-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("scratch dir");
    dir
}

/// The number printed after `prefix` on some stdout line.
fn value_after(stdout: &str, prefix: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(prefix))
        .unwrap_or_else(|| panic!("no `{prefix}` line in:\n{stdout}"))
        .trim()
        .parse()
        .unwrap_or_else(|_| panic!("`{prefix}` line does not end in a number"))
}

/// One named column of a CSV, keeping only rows where `filter`'s column
/// holds its value exactly.
fn csv_column(text: &str, column: &str, filter: Option<(&str, &str)>) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("CSV header").split(',').collect();
    let want = header
        .iter()
        .position(|h| *h == column)
        .unwrap_or_else(|| panic!("no column `{column}`"));
    let filter = filter.map(|(name, value)| {
        let i = header
            .iter()
            .position(|h| *h == name)
            .unwrap_or_else(|| panic!("no column `{name}`"));
        (i, value)
    });
    lines
        .filter(|l| !l.is_empty())
        .filter(|l| match filter {
            Some((i, value)) => l.split(',').nth(i) == Some(value),
            None => true,
        })
        .map(|l| l.split(',').nth(want).expect("field").parse().expect("number"))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn entmax_maps_the_worked_examples() {
    let (code, out, _) = run(&["entmax", "--rho", "2", "--scores", "0.5,0.3,-1"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("0.6,0.4,0"));
    assert_eq!(lines.next(), Some("support {1,2} of 3"));

    let (code, out, _) = run(&["entmax", "--rho", "1", "--scores", "0,0"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next(), Some("0.5,0.5"));

    let (code, out, _) = run(&["entmax", "--rho", "hard", "--scores", "1,3,2"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().next(), Some("0,1,0"));
}

#[test]
fn entmax_reports_the_loss_of_a_target_distribution() {
    let (code, out, _) = run(&[
        "entmax", "--rho", "2", "--scores", "0.5,0.3,-1", "--target", "0.6,0.4,0",
    ]);
    assert_eq!(code, 0);
    // The mapped distribution itself has the smallest possible loss.
    let at_optimum = value_after(&out, "loss ");
    let (_, out, _) = run(&[
        "entmax", "--rho", "2", "--scores", "0.5,0.3,-1", "--target", "0,0,1",
    ]);
    assert!(at_optimum >= 0.0 && at_optimum < value_after(&out, "loss "));
}

#[test]
fn entmax_rejects_malformed_input() {
    let (code, _, err) = run(&["entmax", "--rho", "2", "--scores", "1,frog"]);
    assert_eq!(code, 2);
    assert!(err.contains("usage error"), "stderr: {err}");

    let (code, _, err) = run(&["entmax", "--rho", "2"]);
    assert_eq!(code, 2, "missing input should be a usage error: {err}");

    let (code, _, err) = run(&["entmax", "--rho", "-3", "--scores", "1,2"]);
    assert_eq!(code, 2, "bad index should be a usage error: {err}");
}

#[test]
fn entmax_gradient_suite_reports_tiny_error() {
    let (code, out, _) = run(&[
        "entmax", "--rho", "1.5", "--random", "1000", "16", "--check-gradients",
    ]);
    assert_eq!(code, 0);
    let worst = value_after(&out, "max relative error ");
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn gmm_reruns_are_bit_identical_and_artifacts_present() {
    let dir = scratch("gmm-deterministic");
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out_dir in [&a, &b] {
        let (code, _, err) = run_in(out_dir, &["gmm", "--method", "std", "--seeds", "1"]);
        assert_eq!(code, 0, "stderr: {err}");
    }
    assert_eq!(
        fs::read(a.join("metrics.csv")).unwrap(),
        fs::read(b.join("metrics.csv")).unwrap(),
        "same seed must reproduce the metrics byte for byte"
    );
    for name in ["checkpoint_std_seed0.txt", "fit_std_seed0.svg", "run_manifest.txt"] {
        assert!(a.join(name).exists(), "missing artifact {name}");
    }
    let svg = fs::read_to_string(a.join("fit_std_seed0.svg")).unwrap();
    assert!(svg.starts_with("<svg"), "scatter file is not an SVG");
}

#[test]
fn gmm_sparse_reaches_the_reference_accuracy() {
    let dir = scratch("gmm-sparse");
    let (code, _, err) = run_in(
        &dir,
        &["gmm", "--method", "sparse", "--rho", "2", "--seeds", "5"],
    );
    assert_eq!(code, 0, "stderr: {err}");
    let csv = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    let ami = csv_column(&csv, "ami", Some(("method", "sparse")));
    assert_eq!(ami.len(), 5);
    let m = mean(&ami);
    assert!((m - 0.636).abs() <= 0.05, "mean AMI {m} off the reference");
}

#[test]
fn gmm_hard_runs_spread_wider_than_standard() {
    let dir = scratch("gmm-table");
    let (code, _, err) = run_in(&dir, &["gmm", "--seeds", "5"]);
    assert_eq!(code, 0, "stderr: {err}");
    let csv = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    let hard = csv_column(&csv, "ami", Some(("method", "hard")));
    let standard = csv_column(&csv, "ami", Some(("method", "std")));
    assert_eq!((hard.len(), standard.len()), (5, 5));
    assert!(
        sample_std(&hard) > sample_std(&standard),
        "hard spread {} should exceed standard spread {}",
        sample_std(&hard),
        sample_std(&standard),
    );
}

#[test]
fn gmm_rejects_inconsistent_flags() {
    let dir = scratch("gmm-flags");
    let (code, _, err) = run_in(&dir, &["gmm", "--method", "kmeans"]);
    assert_eq!(code, 2, "stderr: {err}");
    let (code, _, _) = run_in(&dir, &["gmm", "--rho", "1.5"]);
    assert_eq!(code, 2, "--rho without --method should be a usage error");
    let (code, _, _) = run_in(&dir, &["gmm", "--method", "hard", "--rho", "1.5"]);
    assert_eq!(code, 2, "--rho with the hard method should be a usage error");
}

#[test]
fn sweep_writes_the_pinned_csv_and_plots() {
    let dir = scratch("sweep");
    let (code, _, err) = run_in(&dir, &["sweep", "--rhos", "0.5,1,2", "--seeds", "2"]);
    assert_eq!(code, 0, "stderr: {err}");
    let csv = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("method,rho,seed,ami,ari,silhouette,sparsity,final_fyvfe,iters\n"));
    let dense = csv_column(&csv, "sparsity", Some(("rho", "0.5")));
    let sparse = csv_column(&csv, "sparsity", Some(("rho", "2")));
    assert_eq!((dense.len(), sparse.len()), (2, 2));
    assert!(dense.iter().all(|&s| s == 0.0), "no sparsity below one");
    assert!(sparse.iter().all(|&s| s > 0.0), "positive sparsity at two");
    for name in [
        "sweep_ami.svg",
        "sweep_ari.svg",
        "sweep_silhouette.svg",
        "sweep_sparsity.svg",
    ] {
        assert!(dir.join(name).exists(), "missing plot {name}");
    }
}

#[test]
fn vae_classical_corner_matches_gaussian_kl_and_reruns_identically() {
    let dir = scratch("vae-classical");
    let (a, b) = (dir.join("a"), dir.join("b"));
    let args = [
        "--seed", "7", "vae", "--rho", "1", "--rho-obs", "1", "--epochs", "12", "--limit", "96",
    ];
    let (code, out, err) = run_in(&a, &args);
    assert_eq!(code, 0, "stderr: {err}");
    let regularizer = value_after(&out, "regularizer ");
    let gaussian_kl = value_after(&out, "gaussian_kl ");
    assert!(
        (regularizer - gaussian_kl).abs() < 1e-6,
        "classical regularizer {regularizer} vs KL {gaussian_kl}"
    );
    let trace = fs::read_to_string(a.join("trace.csv")).unwrap();
    assert!(trace.starts_with("epoch,mean_loss,recon_l1\n"));
    assert!(a.join("checkpoint.txt").exists());

    let (code, _, _) = run_in(&b, &args);
    assert_eq!(code, 0);
    assert_eq!(
        fs::read(a.join("trace.csv")).unwrap(),
        fs::read(b.join("trace.csv")).unwrap(),
        "same seed must reproduce the trace byte for byte"
    );
}

#[test]
fn vae_loss_trace_decreases() {
    let dir = scratch("vae-decreasing");
    let (code, _, err) = run_in(
        &dir,
        &["vae", "--rho", "2", "--rho-obs", "2", "--data", "synthetic", "--epochs", "15", "--limit", "96"],
    );
    assert_eq!(code, 0, "stderr: {err}");
    let csv = fs::read_to_string(dir.join("trace.csv")).unwrap();
    let losses = csv_column(&csv, "mean_loss", None);
    assert_eq!(losses.len(), 15);
    assert!(
        losses.last().unwrap() < losses.first().unwrap(),
        "loss should fall over training: {losses:?}"
    );
}

#[test]
fn vae_sparse_observation_model_wins_the_paired_run() {
    // The two observation models trained under the same default seed and
    // budget; training is bit-deterministic, so the comparison is exact.
    let dir = scratch("vae-paired");
    let mut l1 = [0.0f64; 2];
    for (slot, obs) in [(0usize, "1"), (1usize, "2")] {
        let (code, out, err) = run_in(
            &dir.join(obs),
            &["vae", "--rho", "1.5", "--rho-obs", obs, "--data", "synthetic"],
        );
        assert_eq!(code, 0, "stderr: {err}");
        l1[slot] = value_after(&out, "final recon l1 ");
    }
    assert!(
        l1[1] <= l1[0],
        "sparse observation l1 {} should not exceed dense {}",
        l1[1],
        l1[0]
    );
}

#[test]
fn vae_trains_from_idx_files_and_reports_their_errors() {
    let dir = scratch("vae-idx");
    // A minimal valid IDX pair: 40 8x8 images and 40 labels.
    let n: u32 = 40;
    let mut images = Vec::new();
    images.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    images.extend_from_slice(&n.to_be_bytes());
    images.extend_from_slice(&8u32.to_be_bytes());
    images.extend_from_slice(&8u32.to_be_bytes());
    images.extend((0..n * 64).map(|i| (i * 37 % 256) as u8));
    let mut labels = Vec::new();
    labels.extend_from_slice(&0x0000_0801u32.to_be_bytes());
    labels.extend_from_slice(&n.to_be_bytes());
    labels.extend((0..n).map(|i| (i % 10) as u8));
    let images_path = dir.join("images.idx");
    let labels_path = dir.join("labels.idx");
    fs::write(&images_path, images).unwrap();
    fs::write(&labels_path, labels).unwrap();

    let (code, _, err) = run_in(
        &dir.join("run"),
        &[
            "vae", "--data", "idx",
            "--images", images_path.to_str().unwrap(),
            "--labels-file", labels_path.to_str().unwrap(),
            "--limit", "40", "--epochs", "2",
        ],
    );
    assert_eq!(code, 0, "stderr: {err}");
    assert!(dir.join("run").join("trace.csv").exists());

    // Missing files are runtime failures, not usage errors.
    let (code, _, err) = run_in(
        &dir.join("missing"),
        &[
            "vae", "--data", "idx",
            "--images", dir.join("nope.idx").to_str().unwrap(),
            "--labels-file", labels_path.to_str().unwrap(),
        ],
    );
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"), "stderr: {err}");

    // Asking for the idx source without paths is a usage error.
    let (code, _, _) = run_in(&dir.join("none"), &["vae", "--data", "idx"]);
    assert_eq!(code, 2);
}

#[test]
fn config_file_values_apply_and_flags_win() {
    let dir = scratch("config");
    let cfg = dir.join("settings.txt");
    fs::write(&cfg, "# benchmark defaults\nseed=9\nseeds=3\nmax-iter=40\n").unwrap();
    let out_dir = dir.join("run");
    let (code, _, err) = run(&[
        "--config", cfg.to_str().unwrap(),
        "--out", out_dir.to_str().unwrap(),
        "gmm", "--method", "std", "--seeds", "1",
    ]);
    assert_eq!(code, 0, "stderr: {err}");
    let manifest = fs::read_to_string(out_dir.join("run_manifest.txt")).unwrap();
    let has = |line: &str| manifest.lines().any(|l| l == line);
    assert!(has("command=gmm"));
    assert!(has("seed=9"), "file-provided seed should apply: {manifest}");
    assert!(has("seeds=1"), "flag should beat the file: {manifest}");
    assert!(has("max-iter=40"), "file-provided cap should apply: {manifest}");
    assert!(manifest.lines().any(|l| l.starts_with("config=")));

    let csv = fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    assert_eq!(csv_column(&csv, "seed", None), vec![9.0]);
    assert_eq!(csv_column(&csv, "iters", None), vec![40.0]);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = scratch("config-unknown");
    let cfg = dir.join("settings.txt");
    fs::write(&cfg, "max_iter=40\n").unwrap(); // should be max-iter
    let (code, _, err) = run(&[
        "--config", cfg.to_str().unwrap(),
        "--out", dir.join("run").to_str().unwrap(),
        "gmm",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("usage error"), "stderr: {err}");
}

#[test]
fn betagauss_tabulates_a_valid_distribution() {
    let dir = scratch("betagauss");
    let (code, out, err) = run_in(
        &dir,
        &["betagauss", "--rho", "2", "--loc", "1", "--scale", "0.5", "--knots", "33"],
    );
    assert_eq!(code, 0, "stderr: {err}");
    assert!(out.contains("support ["), "rho 2 support is bounded: {out}");
    let csv = fs::read_to_string(dir.join("betagauss.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("z,pdf,cdf"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 33);
    assert!(rows.iter().all(|r| r[1] >= 0.0), "densities are nonnegative");
    assert!(
        rows.windows(2).all(|w| w[1][2] >= w[0][2]),
        "distribution function is nondecreasing"
    );
    assert!(rows[0][2] < 1e-9 && (rows[32][2] - 1.0).abs() < 1e-9);

    let (code, _, _) = run_in(&dir, &["betagauss", "--scale", "-1"]);
    assert_eq!(code, 2, "nonpositive scale should be a usage error");
}
