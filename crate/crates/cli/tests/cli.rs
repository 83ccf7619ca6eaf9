use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use spikerate::estimator::estimate_at;
use spikerate::kernel::{kernel_make, KernelFamily};
use spikerate::logio::read_log;
use tempfile::TempDir;

fn spikerate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikerate")).args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, n: usize, horizon: f64, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        "schema-version = 1\nseed = 17\n\n[model]\nn_neurons = {n}\nlambda = 1.0\nm = 1.0\nk_max = 2.0\n\n\
         [simulate]\nhorizon = {horizon}\n{extra}"
    );
    fs::write(&path, text).unwrap();
    path
}

fn simulate_into(config: &Path, out: &Path) -> Output {
    spikerate(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

#[test]
fn simulate_reference_network_jump_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), 100, 200.0, "");
    let out = simulate_into(&cfg, &dir.path().join("sim"));
    assert!(out.status.success(), "{}", stderr(&out));
    let log = read_log(&dir.path().join("sim/log.csv")).unwrap();
    // Published runs of this setting report 17324 to 21214 jumps.
    assert!((8662..=42428).contains(&log.len()), "jumps = {}", log.len());
    assert!(stdout(&out).contains(&format!("{} jumps", log.len())));
    assert!(stderr(&out).contains("wall time"));
}

#[test]
fn simulate_rerun_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), 10, 50.0, "");
    for sub in ["a", "b"] {
        assert!(simulate_into(&cfg, &dir.path().join(sub)).status.success());
    }
    for file in ["log.csv", "log.csv.meta"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
}

#[test]
fn simulate_rejects_zero_horizon() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), 10, 0.0, "");
    let out = simulate_into(&cfg, &dir.path().join("sim"));
    assert!(!out.status.success());
    assert!(stderr(&out).contains("horizon"), "{}", stderr(&out));
    assert!(!dir.path().join("sim/log.csv").exists());
}

#[test]
fn simulate_no_clobber_refuses() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), 10, 20.0, "");
    let sim = dir.path().join("sim");
    assert!(simulate_into(&cfg, &sim).status.success());
    let out = spikerate(&["simulate", "--config", cfg.to_str().unwrap(), "--out", sim.to_str().unwrap(), "--no-clobber"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--no-clobber"));
}

#[test]
fn incoherent_beta_and_kernel_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), 10, 20.0, "[estimation]\nbeta = 2.0\n");
    let out = simulate_into(&cfg, &dir.path().join("sim"));
    assert!(!out.status.success());
    assert!(stderr(&out).contains("beta"), "{}", stderr(&out));
}

fn reference_log(dir: &Path) -> PathBuf {
    let cfg = write_config(dir, 100, 200.0, "");
    let sim = dir.join("sim");
    assert!(simulate_into(&cfg, &sim).status.success());
    sim.join("log.csv")
}

#[test]
fn estimate_matches_library_call() {
    let dir = TempDir::new().unwrap();
    let log_path = reference_log(dir.path());
    let report_path = dir.path().join("report.csv");
    let out = spikerate(&[
        "estimate",
        "--log",
        log_path.to_str().unwrap(),
        "--a",
        "0.5",
        "--h",
        "0.17",
        "--r",
        "0",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let log = read_log(&log_path).unwrap();
    let q = kernel_make(KernelFamily::Epanechnikov, 1.0, 1).unwrap();
    let report = estimate_at(&log, 0.5, 0.17, &q, 0.0).unwrap();
    let expected = format!("{}\n{}\n", spikerate::estimator::EstimateReport::CSV_HEADER, report.csv_row());
    assert_eq!(stdout(&out), expected);
    assert_eq!(fs::read_to_string(report_path).unwrap(), expected);
}

#[test]
fn estimate_at_equilibrium_needs_force() {
    let dir = TempDir::new().unwrap();
    let log_path = reference_log(dir.path());
    let log = log_path.to_str().unwrap();
    let refused = spikerate(&["estimate", "--log", log, "--a", "1.0"]);
    assert!(!refused.status.success());
    assert!(stderr(&refused).contains("--force"));
    let forced = spikerate(&["estimate", "--log", log, "--a", "1.0", "--force"]);
    assert!(forced.status.success(), "{}", stderr(&forced));
    assert_eq!(stdout(&forced).lines().count(), 2);
}

#[test]
fn estimate_auto_bandwidth_is_finite_or_warned() {
    let dir = TempDir::new().unwrap();
    let log_path = reference_log(dir.path());
    let out = spikerate(&["estimate", "--log", log_path.to_str().unwrap(), "--a", "0.5", "--h", "auto"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let h: f64 = row[1].parse().unwrap();
    let grid_lo = 200f64.powf(-0.5);
    let grid_hi = 200f64.powf(-0.125);
    assert!(h.is_finite() && h >= grid_lo * (1.0 - 1e-12) && h <= grid_hi * (1.0 + 1e-12));
    let interior = h > grid_lo * (1.0 + 1e-9) && h < grid_hi * (1.0 - 1e-9);
    assert!(interior || stderr(&out).contains("warning"), "endpoint h = {h} without a warning");
}

#[test]
fn scv_writes_curve() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), 20, 100.0, "");
    let sim = dir.path().join("sim");
    assert!(simulate_into(&cfg, &sim).status.success());
    let curve = dir.path().join("curve.csv");
    let out = spikerate(&["scv", "--log", sim.join("log.csv").to_str().unwrap(), "--out", curve.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(curve).unwrap();
    assert_eq!(text.lines().next(), Some("h,scv_score"));
    assert_eq!(text.lines().count(), 33);
}

fn rate_smoke_config(dir: &Path) -> PathBuf {
    write_config(dir, 5, 10.0, "\n[estimation]\nd = 0.65\n\n[study]\nhorizons = [20.0, 40.0, 80.0]\nreplications = 4\npoints = [0.3]\n")
}

#[test]
fn rate_study_smoke_runs_quickly() {
    let dir = TempDir::new().unwrap();
    let cfg = rate_smoke_config(dir.path());
    let out_dir = dir.path().join("study");
    let start = Instant::now();
    let out = spikerate(&["study", "rate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(start.elapsed() < Duration::from_secs(60));
    assert!(out_dir.join("rate_summary.json").exists());
    assert!(out_dir.join("rate.csv").exists());
}

#[test]
fn study_no_clobber_refuses_rerun() {
    let dir = TempDir::new().unwrap();
    let cfg = rate_smoke_config(dir.path());
    let out_dir = dir.path().join("study");
    let args = ["study", "rate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--no-clobber"];
    assert!(spikerate(&args).status.success());
    let again = spikerate(&args);
    assert!(!again.status.success());
    assert!(stderr(&again).contains("--no-clobber"));
}

#[test]
fn study_outputs_identical_across_reruns() {
    let dir = TempDir::new().unwrap();
    let cfg = rate_smoke_config(dir.path());
    for (sub, threads) in [("a", "1"), ("b", "2")] {
        let out_dir = dir.path().join(sub);
        let out =
            spikerate(&["--threads", threads, "study", "rate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for file in ["rate.csv", "rate_summary.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(file)).unwrap(), fs::read(dir.path().join("b").join(file)).unwrap());
    }
}

#[test]
fn unknown_study_kind_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = rate_smoke_config(dir.path());
    let out = spikerate(&["study", "bogus", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus"));
}
