//! Normalization checks for the excursion side: local time of the killed
//! walk, mean occupation of the return excursions, and the unconditioned
//! overlay against the field with same-sign pins.

use crate::error::Result;
use crate::excursions::{sample_killed_walk, sample_xx_ensemble, ExcursionEnsemble, HWalk};
use crate::gff::p_same_sign;
use crate::green::green;
use crate::lab::config::ExperimentConfig;
use crate::lab::report::{FunctionalResult, TestReport};
use crate::lab::switching::{CrossingRule, SwitchingSetup};
use crate::loops::Parity;
use crate::seed::replicate;
use crate::stats::{ks_two_sample, mean_se};

pub fn run_calibration(cfg: &ExperimentConfig) -> Result<TestReport> {
    cfg.validate()?;
    let s = SwitchingSetup::new(cfg)?;
    let g = &s.graph;
    let n = cfg.replicas;
    let mut rep = TestReport::new(cfg.kind.name(), cfg.seed, n);
    rep.note("return intensity", crate::excursions::RETURN_INTENSITY);
    rep.note("occupation per local time", crate::excursions::OCCUPATION_SCALE);
    let k = s.probes.len();

    // killed walk from x: expected local time at z is G(x, z)
    let gr = green(g)?;
    let walks = replicate(n, cfg.seed, "calibrate-walk", |_, rng| {
        let mut e = ExcursionEnsemble::empty(g);
        e.push(sample_killed_walk(g, s.x, rng));
        s.probes.iter().map(|&z| e.local_time[z]).collect::<Vec<f64>>()
    });
    for (i, &z) in s.probes.iter().enumerate() {
        let (m, se) = mean_se(&walks.iter().map(|r| r[i]).collect::<Vec<_>>());
        rep.push(FunctionalResult::within_se(format!("walk local time at {}", s.probe_label(i)), n, m, se, gr.get(s.x, z), 3.0));
    }

    // returns to x avoiding y carry mean occupation a^2 h(z)^2
    let xx = HWalk::new(g, s.x, s.x, &[s.y])?;
    let phi = s.sampler.field().harmonic(0);
    let ret = replicate(n, cfg.seed, "calibrate-returns", |_, rng| {
        sample_xx_ensemble(g, &xx, s.a, rng).map(|e| s.probes.iter().map(|&z| e.occupation(z)).collect::<Vec<f64>>())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    for (i, &z) in s.probes.iter().enumerate() {
        let (m, se) = mean_se(&ret.iter().map(|r| r[i]).collect::<Vec<_>>());
        rep.push(FunctionalResult::within_se(
            format!("return occupation at {}", s.probe_label(i)),
            n,
            m,
            se,
            (s.a * phi[z]).powi(2),
            3.0,
        ));
    }

    // unconstrained overlay against the field with same-sign pins
    let free = CrossingRule { parity: Parity::None, mass_scale: 1.0 };
    let rhs = replicate(n, cfg.seed, "calibrate-free", |_, rng| s.sample_rhs(free, rng))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let lhs = replicate(n, cfg.seed, "calibrate-pinned", |_, rng| {
        let d = s.sampler.sample_signed(g, true, rng);
        s.probes.iter().map(|&z| d.sample.occupation(z)).collect::<Vec<f64>>()
    });
    let threshold = cfg.alpha / (k + 1) as f64;
    for i in 0..k {
        let xs: Vec<f64> = lhs.iter().map(|r| r[i]).collect();
        let ys: Vec<f64> = rhs.iter().map(|r| r[i]).collect();
        rep.push(FunctionalResult::ks(format!("free overlay vs same-sign field at {}", s.probe_label(i)), n, ks_two_sample(&xs, &ys)?, threshold));
    }
    let sx: Vec<f64> = lhs.iter().map(|r| r.iter().sum()).collect();
    let sy: Vec<f64> = rhs.iter().map(|r| r.iter().sum()).collect();
    rep.push(FunctionalResult::ks("free overlay vs same-sign field, summed", n, ks_two_sample(&sx, &sy)?, threshold));

    // field with the sign drawn: mixture of the two signed means
    let mixed = replicate(n, cfg.seed, "calibrate-mixed", |_, rng| {
        let d = s.sampler.sample(g, rng);
        s.probes.iter().map(|&z| d.sample.occupation(z)).sum::<f64>()
    });
    let p = p_same_sign(s.mass());
    let f = s.sampler.field();
    let want: f64 = s
        .probes
        .iter()
        .map(|&z| {
            let (g0, p1, p2) = (f.reduced_green().get(z, z), f.harmonic(0)[z], f.harmonic(1)[z]);
            g0 + p * (s.a * p1 + s.b * p2).powi(2) + (1.0 - p) * (s.a * p1 - s.b * p2).powi(2)
        })
        .sum();
    let (m, se) = mean_se(&mixed);
    rep.push(FunctionalResult::within_se("field occupation mean, summed", n, m, se, want, 3.0));
    Ok(rep)
}
