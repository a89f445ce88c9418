//! Experiments outside the acceptance suite.

use loopforge::lab::{self, ExperimentConfig, ExperimentKind};

fn run(kind: ExperimentKind, replicas: usize, seed: u64) -> lab::TestReport {
    let c = ExperimentConfig { replicas, seed, ..ExperimentConfig::for_kind(kind) };
    lab::run(&c).unwrap()
}

#[test]
fn calibration_matches_green_function() {
    let r = run(ExperimentKind::Calibrate, 20_000, 5);
    assert!(r.passed(), "{}", r.summary());
}

#[test]
fn interlacement_switching_passes() {
    let r = run(ExperimentKind::Interlacement, 5_000, 5);
    assert!(r.passed(), "{}", r.summary());
}

#[test]
fn reports_are_deterministic_in_the_seed() {
    let a = run(ExperimentKind::Calibrate, 500, 9).csv_string().unwrap();
    let b = run(ExperimentKind::Calibrate, 500, 9).csv_string().unwrap();
    let c = run(ExperimentKind::Calibrate, 500, 10).csv_string().unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn too_few_replicas_is_rejected() {
    let c = ExperimentConfig { replicas: 10, ..ExperimentConfig::for_kind(ExperimentKind::TwoPoint) };
    assert!(c.validate().is_err());
}
