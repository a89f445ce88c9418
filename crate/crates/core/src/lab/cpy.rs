//! Single-edge comparison: a bridge conditioned to stay positive against
//! two absorbed flows plus a squared Bessel bridge.

use crate::error::Result;
use crate::lab::config::{ExperimentConfig, NegativeControl, CONSTANT_SCALE};
use crate::lab::report::{FunctionalResult, TestReport};
use crate::loops::Parity;
use crate::one_edge::{condition_positive, reflected_bridge, sample_cpy_rhs, GridPath};
use crate::seed::replicate;
use crate::stats::ks_two_sample;

const TIMES: [f64; 3] = [0.25, 0.5, 0.75];

fn functionals(p: &GridPath) -> [f64; 4] {
    [p.at(TIMES[0]), p.at(TIMES[1]), p.at(TIMES[2]), p.integral()]
}

const NAMES: [&str; 4] = ["X(1/4)", "X(1/2)", "X(3/4)", "integral of X"];

fn rate(attempts: u64, n: usize, want: f64, name: &str) -> FunctionalResult {
    let se = (want * (1.0 - want) / attempts as f64).sqrt();
    FunctionalResult::within_se(name, attempts as usize, n as f64 / attempts as f64, se, want, 3.0)
}

/// Odd parity: positive bridge against the decomposition with an odd count.
/// Even parity: reflected bridge against an even count.
pub fn run_cpy_test(cfg: &ExperimentConfig) -> Result<TestReport> {
    cfg.validate()?;
    let (a, b, n, steps) = (cfg.a, cfg.b, cfg.replicas, cfg.steps);
    let c = if cfg.negative_control == Some(NegativeControl::ConstantScale) { CONSTANT_SCALE } else { 1.0 };
    let parity = if cfg.parity == Parity::Even { Parity::Even } else { Parity::Odd };
    let mut rep = TestReport::new(cfg.kind.name(), cfg.seed, n);
    rep.note("steps", steps);
    rep.note("crossing constant", c);
    rep.note("parity", format!("{parity:?}").to_lowercase());

    let lhs = replicate(n, cfg.seed, "cpy-lhs", |_, rng| match parity {
        Parity::Even => reflected_bridge(a, b, steps, rng).map(|p| (functionals(&p), 1)),
        _ => condition_positive(a, b, steps, rng).map(|(p, k)| (functionals(&p), k)),
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rhs = replicate(n, cfg.seed, "cpy-rhs", |_, rng| {
        sample_cpy_rhs(a, b, steps, c, parity, rng).map(|(p, d)| (functionals(&p), d))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    for (i, name) in NAMES.iter().enumerate() {
        let xs: Vec<f64> = lhs.iter().map(|r| r.0[i]).collect();
        let ys: Vec<f64> = rhs.iter().map(|r| r.0[i]).collect();
        rep.push(FunctionalResult::ks(*name, n, ks_two_sample(&xs, &ys)?, cfg.alpha / NAMES.len() as f64));
    }
    if parity == Parity::Odd {
        let att: u64 = lhs.iter().map(|r| r.1).sum();
        rep.push(rate(att, n, 1.0 - (-2.0 * a * b).exp(), "positive bridge acceptance rate"));
    }
    let att: u64 = rhs.iter().map(|r| r.1.attempts_a).sum();
    rep.push(rate(att, n, (-a * a / 2.0).exp(), "absorbed flow acceptance rate"));
    Ok(rep)
}
