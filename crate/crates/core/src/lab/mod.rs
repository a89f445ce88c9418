//! Experiments. Each one is a pure function of its configuration and seed
//! and returns a [`TestReport`].

pub mod calibrate;
pub mod config;
pub mod cpy;
pub mod iic;
pub mod pnew;
pub mod report;
pub mod switching;
pub mod two_point;
pub mod winding;

pub use config::{ExperimentConfig, ExperimentKind, NegativeControl};
pub use report::{FunctionalResult, TestReport, Verdict};

use crate::error::Result;

pub fn run(cfg: &ExperimentConfig) -> Result<TestReport> {
    match cfg.kind {
        ExperimentKind::TwoPoint => two_point::run_two_point_test(cfg),
        ExperimentKind::Parity => two_point::run_parity_test(cfg),
        ExperimentKind::Switching | ExperimentKind::Interlacement => switching::run_switching_test(cfg),
        ExperimentKind::Pnew => pnew::run_pnew_test(cfg),
        ExperimentKind::Winding => winding::run_winding_test(cfg),
        ExperimentKind::OneEdge => cpy::run_cpy_test(cfg),
        ExperimentKind::Iic => iic::run_iic_experiment(cfg),
        ExperimentKind::Calibrate => calibrate::run_calibration(cfg),
    }
}
