use std::path::Path;
use std::process::Command;

use varsel_cli::config::{Mode, RunConfig};
use varsel_cli::metrics::{read_jsonl, write_jsonl, MetricRecord};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_varsel"))
}

#[test]
fn missing_fields_take_defaults() {
    let cfg: RunConfig = serde_json::from_str(r#"{"mode": "mnist", "seed": 7}"#).unwrap();
    assert_eq!(cfg.mode, Mode::Mnist);
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.t_ref, 0.05);
    assert_eq!(cfg.t_sign, 0.05);
    assert_eq!(cfg.nce_cutoff, 0.25);
    assert_eq!(cfg.epsilon, 0.1);
    assert_eq!(cfg.population, 10);
}

#[test]
fn unknown_fields_are_rejected() {
    assert!(serde_json::from_str::<RunConfig>(r#"{"t_rfe": 0.1}"#).is_err());
}

#[test]
fn zero_trials_is_a_config_error() {
    let cfg = RunConfig { trial_count: 0, ..RunConfig::default() };
    let err = cfg.validate().unwrap_err().to_string();
    assert!(err.contains("trial_count"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["--mode", "fsm", "--trials", "0", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("trial_count"));
}

#[test]
fn thresholds_out_of_range_are_rejected() {
    for cfg in [
        RunConfig { t_ref: 1.0, ..RunConfig::default() },
        RunConfig { t_sign: 0.0, ..RunConfig::default() },
        RunConfig { epsilon: 1.5, ..RunConfig::default() },
        RunConfig { population: 0, ..RunConfig::default() },
    ] {
        assert!(cfg.validate().is_err());
    }
}

#[test]
fn metrics_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.jsonl");
    let recs = vec![
        MetricRecord::new("episode_duration", 4.0).trial(0).phase(1).iteration(3),
        MetricRecord::new("accuracy_class_3", 0.82).trial(2).cycle(4).iteration(1),
        MetricRecord::new("phase_mean", 5.25).phase(0),
    ];
    write_jsonl(&path, &recs).unwrap();
    assert_eq!(read_jsonl(&path).unwrap(), recs);
}

#[test]
fn missing_dataset_names_expected_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--mode", "mnist", "--trials", "1", "--data-dir", "/definitely/not/here", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/definitely/not/here/train-images-idx3-ubyte"), "{err}");
    assert!(err.contains("/definitely/not/here/train-labels-idx1-ubyte"), "{err}");
}

fn check_outputs(dir: &Path) -> Vec<MetricRecord> {
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["config"].is_object());
    assert!(manifest["version"].is_string());
    serde_json::from_str::<serde_json::Value>(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    read_jsonl(&dir.join("metrics.jsonl")).unwrap()
}

#[test]
fn fsm_run_writes_metrics_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("model.dot");
    let out = bin()
        .args(["--mode", "fsm", "--trials", "1", "--seed", "3", "--schedule", "readaptation", "--out"])
        .arg(dir.path())
        .arg("--export-dot")
        .arg(&dot)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = check_outputs(dir.path());
    assert!(recs.iter().any(|r| r.metric == "episode_duration"));
    assert!(recs.iter().any(|r| r.metric == "random_episode_duration"));
    assert_eq!(recs.iter().filter(|r| r.metric == "phase_start_step").count(), 5);
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph model {"));
}

#[test]
fn fsm_runs_are_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let out = bin()
            .args(["--mode", "fsm", "--trials", "2", "--seed", "11", "--schedule", "readaptation", "--out"])
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success());
        std::fs::read(dir.path().join("metrics.jsonl")).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn mnist_smoke_run() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    if !data.join("train-images-idx3-ubyte").is_file() {
        eprintln!("dataset not present, skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--mode", "mnist", "--trials", "1", "--classes", "3", "--cycles", "1", "--samples", "1"])
        .args(["--test-per-class", "5", "--out"])
        .arg(dir.path())
        .arg("--data-dir")
        .arg(&data)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = check_outputs(dir.path());
    let acc: Vec<_> = recs.iter().filter(|r| r.metric.starts_with("accuracy_class_")).collect();
    assert_eq!(acc.len(), 9);
    assert!(acc.iter().all(|r| (0.0..=1.0).contains(&r.value)));
}
