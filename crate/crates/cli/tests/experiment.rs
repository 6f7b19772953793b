use std::fs;

use mnlqr_cli::experiment::{METHOD_MODEL_BASED, METHOD_MODEL_FREE};
use mnlqr_cli::output::{CSV_FILE, SUMMARY_FILE};
use mnlqr_cli::{
    emit_convergence_csv, resolve_config, run_experiment, write_artifacts, ConvergenceRecord, Mode,
};

const LAMBDA_STAR: f64 = 2.1943;

#[test]
fn model_based_run_reaches_reference_cost() {
    let mut config = resolve_config("example_sec6").unwrap();
    config.mode = Mode::ModelBased;
    let outcome = run_experiment(&config).unwrap();
    let mb = outcome.summary.model_based.as_ref().unwrap();
    assert!(mb.converged);
    assert!(
        (mb.lambda - LAMBDA_STAR).abs() <= 5e-4,
        "lambda {}",
        mb.lambda
    );
    assert!((outcome.summary.reference.lambda - LAMBDA_STAR).abs() <= 5e-4);
    assert!(outcome.summary.model_free.is_none());

    let errors: Vec<f64> = outcome.records.iter().map(|r| r.gain_error).collect();
    assert_eq!(errors.len(), mb.iterations);
    assert!(outcome
        .records
        .iter()
        .all(|r| r.method == METHOD_MODEL_BASED && r.seed == 0));
    let last_positive = errors.iter().rposition(|&e| e > 0.0).unwrap();
    for w in errors[..=last_positive].windows(2) {
        assert!(w[1] < w[0], "{errors:?}");
    }
    assert!(*errors.last().unwrap() < 1e-6);
    let costs: Vec<f64> = outcome.records.iter().map(|r| r.lambda).collect();
    for w in costs.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
}

#[test]
fn model_free_majority_within_cost_band() {
    let mut config = resolve_config("example_sec6").unwrap();
    config.mode = Mode::ModelFree;
    let outcome = run_experiment(&config).unwrap();
    let mf = outcome.summary.model_free.as_ref().unwrap();
    assert_eq!(mf.seeds_run, 10);
    assert!(
        mf.seeds_within_bounds * 2 > mf.seeds_run,
        "{} within",
        mf.seeds_within_bounds
    );
    assert_eq!(outcome.failures().len(), mf.seeds_failed);
    for failure in outcome.failures() {
        let text = failure.to_string();
        assert!(
            text.contains("model-free") && text.contains("seed"),
            "{text}"
        );
        assert_eq!(failure.exit_code(), 2);
    }
}

#[test]
fn records_are_sorted_and_cover_every_iteration() {
    let config = resolve_config("scalar_smoke").unwrap();
    let outcome = run_experiment(&config).unwrap();
    let keys: Vec<_> = outcome
        .records
        .iter()
        .map(|r| (r.method.clone(), r.seed, r.tau))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let mf = outcome.summary.model_free.as_ref().unwrap();
    for run in &mf.runs {
        let n = outcome
            .records
            .iter()
            .filter(|r| r.method == METHOD_MODEL_FREE && r.seed == run.seed)
            .count();
        assert_eq!(n, run.iterations);
        let last = outcome
            .records
            .iter()
            .rfind(|r| r.method == METHOD_MODEL_FREE && r.seed == run.seed)
            .unwrap();
        assert_eq!(Some(last.lambda), run.lambda);
    }
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let config = resolve_config("scalar_smoke").unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_artifacts(&run_experiment(&config).unwrap(), a.path()).unwrap();
    write_artifacts(&run_experiment(&config).unwrap(), b.path()).unwrap();
    for file in [CSV_FILE, SUMMARY_FILE] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap()
        );
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary["mode"], "both");
    assert_eq!(summary["model_free"]["runs"].as_array().unwrap().len(), 3);
}

#[test]
fn empty_record_list_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(CSV_FILE);
    emit_convergence_csv(&[], &path).unwrap();
    assert_eq!(
        fs::read_to_string(&path).unwrap(),
        "method,seed,tau,gain_error,rel_cost_error,lambda\n"
    );
}

#[test]
fn single_record_round_trips_at_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(CSV_FILE);
    let record = ConvergenceRecord {
        method: METHOD_MODEL_FREE.into(),
        seed: 7,
        tau: 3,
        gain_error: 0.1 + 0.2,
        rel_cost_error: 1.0 / 3.0,
        lambda: std::f64::consts::PI * 1e-7,
    };
    emit_convergence_csv(std::slice::from_ref(&record), &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[..3], ["model-free", "7", "3"]);
    let parsed: Vec<f64> = fields[3..].iter().map(|f| f.parse().unwrap()).collect();
    assert_eq!(
        parsed,
        [record.gain_error, record.rel_cost_error, record.lambda]
    );
}

#[test]
fn unwritable_output_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let outcome = run_experiment(&{
        let mut c = resolve_config("scalar_smoke").unwrap();
        c.mode = Mode::ModelBased;
        c
    })
    .unwrap();
    let err = write_artifacts(&outcome, &blocker.join("sub")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
