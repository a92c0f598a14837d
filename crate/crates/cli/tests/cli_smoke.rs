//! End-to-end checks of the `ntkpde` binary: exit codes, artifact files,
//! diagnostics on bad input, and reproducibility across reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ntkpde"))
        .args(args)
        .output()
        .expect("binary must execute")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process must exit normally")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    fs::write(&path, body).unwrap();
    path
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("expected artifact {name}: {e}"))
}

/// Risk column of a trace file.
fn risks(trace: &str) -> Vec<f64> {
    trace
        .lines()
        .skip(1)
        .map(|line| line.split(',').nth(2).unwrap().parse().unwrap())
        .collect()
}

const SMALL: &str = r#"
seed = 11

[problem]
dim = 1

[barron]
atoms = [
  { a = 0.9, w = [1.0], p = 0.3333333333333333 },
  { a = -0.5, w = [1.2], p = 0.3333333333333333 },
  { a = 0.3, w = [0.8], p = 0.3333333333333334 },
]

[samples]
n = 5

[train]
width = 64
steps = 40
asi = true
gram_cadence = 10

[diagnostics]
kernel_mc = 2000
"#;

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["converge", "approx", "generalize", "spectrum"] {
        assert!(text.contains(sub), "help must list `{sub}`:\n{text}");
    }
}

#[test]
fn converge_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = run(&["converge", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let trace = read(&out_dir, "trace.csv");
    assert!(trace.starts_with("step,t,risk,path_norm,max_da,max_dw,lambda_min,gram_drift\n"));
    let r = risks(&trace);
    assert_eq!(r.len(), 41, "every step plus the start must be recorded");
    for pair in r.windows(2) {
        assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "risk must not increase: {pair:?}");
    }

    let drift = read(&out_dir, "gram_drift.csv");
    assert!(drift.starts_with("step,t,lambda_min,gram_drift,in_set\n"));
    assert_eq!(drift.lines().count(), 1 + 5, "snapshots at steps 0,10,20,30,40");

    let report = read(&out_dir, "bound_report.csv");
    assert!(report.starts_with("name,bound,measured,satisfied,inputs\n"));
    assert!(report.contains("linear_rate"));
    assert!(report.contains("initial_risk"));
    assert!(report.contains("drift_radius"));
    assert!(dir.path().join("out/bound_report.txt").exists());

    let manifest = read(&out_dir, "manifest.txt");
    assert!(manifest.contains("command = converge"));
    assert!(manifest.contains("config_sha256 = "));
    assert!(manifest.contains("seed = 11"));
}

#[test]
fn reruns_reproduce_identical_bytes_and_seeds_differ() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = run(&["converge", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        outputs.push(fs::read(out_dir.join("trace.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "same config and seed must reproduce bytes");

    let out_dir = dir.path().join("c");
    let out = run(&[
        "converge",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "12",
    ]);
    assert_eq!(code(&out), 0);
    let other = fs::read(out_dir.join("trace.csv")).unwrap();
    assert_ne!(outputs[0], other, "a different seed must change the run");
    assert!(read(&out_dir, "manifest.txt").contains("seed = 12"));
}

#[test]
fn thread_cap_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for (name, threads) in [("t1", "1"), ("t2", "2")] {
        let out_dir = dir.path().join(name);
        let out = run(&[
            "converge",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert_eq!(code(&out), 0);
        outputs.push(fs::read(out_dir.join("trace.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn malformed_expression_fails_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
seed = 1
[problem]
dim = 1
rhs = "sin(2*x1"
[samples]
n = 4
[train]
width = 16
steps = 5
"#,
    );
    let out = run(&["converge", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("problem.rhs"), "stderr must name the field: {err}");
    assert!(err.contains("column"), "stderr must give the position: {err}");
}

#[test]
fn missing_config_file_fails_cleanly() {
    let out = run(&["converge", "--config", "/nonexistent/nowhere.toml"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn runaway_learning_rate_trips_the_guard() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
seed = 1
[problem]
dim = 1
rhs = "0.5*sin(3*x1)"
[samples]
n = 4
[train]
width = 32
steps = 200
learning_rate = 1e9
"#,
    );
    let out = run(&["converge", "--config", config.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn approx_needs_a_mixture_right_hand_side() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
seed = 1
[problem]
dim = 1
rhs = "0.5*sin(3*x1)"
[samples]
n = 4
[train]
width = 16
steps = 5
[approx]
widths = [4, 8]
seeds_per_width = 2
num_mc = 100
"#,
    );
    let out = run(&["approx", "--config", config.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("barron"));
}

#[test]
fn approx_writes_scaling_table() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{SMALL}\n[approx]\nwidths = [4, 16, 64]\nseeds_per_width = 4\nnum_mc = 400\n"
    );
    let config = write_config(dir.path(), &body);
    let out_dir = dir.path().join("out");
    let out = run(&["approx", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let table = read(&out_dir, "approx_scaling.csv");
    assert!(table.starts_with("width,mean_risk,std_err,bound\n"));
    assert_eq!(table.lines().count(), 4);
    let slope = read(&out_dir, "slope_report.txt");
    assert!(slope.contains("fitted_log_log_slope"));
}

#[test]
fn generalize_writes_both_gap_reports() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL
        .replace("n = 5", "n = 20")
        .replace("steps = 40", "steps = 30\nlambda = 2.0");
    let config = write_config(dir.path(), &body);
    let out_dir = dir.path().join("out");
    let out = run(&["generalize", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = read(&out_dir, "bound_report.csv");
    assert!(report.contains("posterior_gap"));
    assert!(report.contains("prior_risk"), "mixture declares the norm: {report}");
    assert!(out_dir.join("trace.csv").exists());
}

#[test]
fn spectrum_writes_width_table_and_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{SMALL}\n[spectrum]\nwidths = [2, 8]\nseeds = 2\nnum_mc = 2000\n");
    let config = write_config(dir.path(), &body);
    let out_dir = dir.path().join("out");
    let out = run(&["spectrum", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let widths = read(&out_dir, "spectrum_widths.csv");
    assert!(widths.starts_with("width,mean_lambda_min,se_lambda_min,mean_kernel_gap,se_kernel_gap\n"));
    assert_eq!(widths.lines().count(), 3);
    let kernel = read(&out_dir, "kernel_estimate.csv");
    assert_eq!(kernel.lines().count(), 1 + 25, "5x5 kernel entries");
    assert!(read(&out_dir, "spectrum_report.txt").contains("kernel_lambda_min"));
}

#[test]
fn gram_cadence_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "converge",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--gram-cadence",
        "20",
    ]);
    assert_eq!(code(&out), 0);
    let drift = read(&out_dir, "gram_drift.csv");
    assert_eq!(drift.lines().count(), 1 + 3, "snapshots at steps 0,20,40");
}

#[test]
fn bundled_configs_run_clean() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let dir = tempfile::tempdir().unwrap();
    for (file, subcommand) in [
        ("reference.toml", "converge"),
        ("dirichlet.toml", "converge"),
        ("heat.toml", "converge"),
        ("approx.toml", "approx"),
        ("generalize.toml", "generalize"),
        ("spectrum.toml", "spectrum"),
    ] {
        let config = configs.join(file);
        assert!(config.exists(), "bundled config {file} is missing");
        let out_dir = dir.path().join(file.trim_end_matches(".toml"));
        let out = run(&[
            subcommand,
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(
            code(&out),
            0,
            "{file} via {subcommand} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(out_dir.join("manifest.txt").exists(), "{file} must write a manifest");
    }
}
