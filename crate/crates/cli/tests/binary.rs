use std::fs;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_mnlqr");

fn mnlqr(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("MNLQR_OUT_DIR")
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn lists_fixtures() {
    let out = mnlqr(&["fixtures"]);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    assert!(stdout.contains("example_sec6") && stdout.contains("scalar_smoke"));
}

#[test]
fn check_prints_canonical_config() {
    let out = mnlqr(&["check", "--config", "scalar_smoke"]);
    assert_eq!(out.status.code(), Some(0));
    let canonical = text(&out.stdout);
    let reparsed = mnlqr_cli::parse_config(&canonical, "stdout").unwrap();
    assert_eq!(reparsed, mnlqr_cli::resolve_config("scalar_smoke").unwrap());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml");
    assert_eq!(
        mnlqr(&["run", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "mode = \"model-based\"\n[model]\nA = [[0.9]]\n").unwrap();
    let out = mnlqr(&["check", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        text(&out.stderr).contains("model.B"),
        "{}",
        text(&out.stderr)
    );

    let out = mnlqr(&[
        "run",
        "--config",
        "scalar_smoke",
        "--mode",
        "model-free",
        "--seeds",
        "",
    ]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn run_writes_artifacts_to_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = mnlqr(&[
        "run",
        "--config",
        "scalar_smoke",
        "--seeds",
        "0,2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("convergence.csv")).unwrap();
    assert!(csv.starts_with("method,seed,tau,gain_error,rel_cost_error,lambda\n"));
    assert!(csv.contains("\nmodel-free,2,0,"));
    assert!(!csv.contains("\nmodel-free,1,"));
    assert!(out_dir.join("summary.json").exists());
}

#[test]
fn out_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("env");
    let flag_dir = dir.path().join("flag");
    let run = |extra: &[&str]| {
        Command::new(BIN)
            .args(["run", "--config", "scalar_smoke", "--mode", "model-based"])
            .args(extra)
            .env("MNLQR_OUT_DIR", &env_dir)
            .output()
            .unwrap()
    };
    assert!(run(&[]).status.success());
    assert!(env_dir.join("summary.json").exists());
    assert!(run(&["--out", flag_dir.to_str().unwrap()]).status.success());
    assert!(flag_dir.join("summary.json").exists());
}

#[test]
fn learner_failure_exits_with_two_and_names_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = mnlqr(&[
        "run",
        "--config",
        "example_sec6",
        "--mode",
        "model-free",
        "--seeds",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = text(&out.stderr);
    assert!(stderr.contains("seed 1 at iteration 1"), "{stderr}");
    assert!(dir.path().join("summary.json").exists());
}
