//! Sign and connection laws at two pinned vertices, and the parity laws of
//! the crossing count.

use statrs::function::gamma::ln_gamma;

use crate::error::Result;
use crate::excursions::{sample_xy_ensemble, HWalk};
use crate::gff::{p_same_sign, prob_connected, TwoPointSampler};
use crate::lab::config::ExperimentConfig;
use crate::lab::report::{FunctionalResult, TestReport};
use crate::loops::{conditioned_poisson, conditioned_poisson_pmf, crossing_pmf_discrete, Parity};
use crate::seed::replicate;
use crate::stats::total_variation;

fn rate(hits: usize, n: usize, p: f64, name: &str) -> FunctionalResult {
    let se = (p * (1.0 - p) / n as f64).sqrt();
    FunctionalResult::within_se(name, n, hits as f64 / n as f64, se, p, 3.0)
}

pub fn run_two_point_test(cfg: &ExperimentConfig) -> Result<TestReport> {
    cfg.validate()?;
    let (base, g) = cfg.graph()?;
    let (x, y) = cfg.marks(&base)?;
    let s = TwoPointSampler::new(&g, x, y, cfg.a, cfg.b)?;
    let n = cfg.replicas;
    let m = s.mass;
    let mut rep = TestReport::new(cfg.kind.name(), cfg.seed, n);
    rep.note("mass", format!("{m:.6}"));

    let draws = replicate(n, cfg.seed, "two-point", |_, rng| {
        let d = s.sample(&g, rng);
        (d.same_sign, d.connected)
    });
    let same = draws.iter().filter(|d| d.0).count();
    let conn = draws.iter().filter(|d| d.1).count();
    rep.push(rate(conn, n, prob_connected(m), "P[x <-> y]"));
    rep.push(rate(same, n, p_same_sign(m), "P[same sign]"));

    let signed = replicate(n, cfg.seed, "two-point-signed", |_, rng| s.sample_signed(&g, true, rng).connected);
    let apart = signed.iter().filter(|&&c| !c).count();
    rep.push(rate(apart, n, (-2.0 * m).exp(), "P[x not<-> y | same-sign pins]"));
    Ok(rep)
}

/// Total variation between the discrete crossing law at scale `k` and
/// the even-conditioned Poisson law of mean `alpha a b`.
pub fn crossing_limit_tv(k: u64, a: f64, b: f64, alpha: f64) -> Result<f64> {
    let av = (a * a * k as f64).floor() as u64;
    let bv = (b * b * k as f64).floor() as u64;
    let pxy = alpha / k as f64;
    let pmf = crossing_pmf_discrete(av, bv, 1.0 - pxy, 1.0 - pxy, pxy)?;
    let m = alpha * a * b;
    let limit: Vec<f64> = (0..pmf.len())
        .map(|t| {
            let n = 2.0 * t as f64;
            (n * m.ln() - ln_gamma(n + 1.0)).exp() / m.cosh()
        })
        .collect();
    Ok(total_variation(&pmf, &limit))
}

pub const POISSON_MEANS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

pub fn run_parity_test(cfg: &ExperimentConfig) -> Result<TestReport> {
    cfg.validate()?;
    let (base, g) = cfg.graph()?;
    let (x, y) = cfg.marks(&base)?;
    let n = cfg.replicas;
    let mut rep = TestReport::new(cfg.kind.name(), cfg.seed, n);

    // unconstrained crossing count: P[even] - P[odd] = e^{-2m}
    let walk = HWalk::new(&g, x, y, &[])?;
    let m = cfg.a * cfg.b * walk.mass();
    rep.note("mass", format!("{m:.6}"));
    let counts = replicate(n, cfg.seed, "parity-count", |_, rng| {
        sample_xy_ensemble(&g, &walk, cfg.a, cfg.b, Parity::None, rng).map(|e| e.len())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let diff: Vec<f64> = counts.iter().map(|&c| if c % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let (d, se) = crate::stats::mean_se(&diff);
    rep.push(FunctionalResult::within_se("P[even] - P[odd] crossings", n, d, se, (-2.0 * m).exp(), 3.0));

    // conditioned sampler against its mass function
    for &mean in &POISSON_MEANS {
        for parity in [Parity::Even, Parity::Odd] {
            let tag = format!("parity-pmf-{mean}-{parity:?}");
            let draws = replicate(n, cfg.seed, &tag, |_, rng| conditioned_poisson(mean, parity, rng))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let len = (*draws.iter().max().unwrap_or(&0) as usize + 1).max(40);
            let mut emp = vec![0.0; len];
            for &k in &draws {
                emp[k as usize] += 1.0 / n as f64;
            }
            let pmf = conditioned_poisson_pmf(mean, parity, len)?;
            let tv = total_variation(&emp, &pmf);
            let name = format!("conditioned Poisson TV, mean {mean}, {}", format!("{parity:?}").to_lowercase());
            rep.push(FunctionalResult::at_most(name, n, tv, 0.005, "total variation"));
        }
    }

    let tv = crossing_limit_tv(1000, 1.0, 1.0, 1.0)?;
    rep.push(FunctionalResult::at_most("discrete crossing law at K=1000 vs even Poisson(1)", 0, tv, 0.02, "total variation"));

    let s = TwoPointSampler::new(&g, x, y, cfg.a, cfg.b)?;
    let apart = replicate(n, cfg.seed, "parity-signed", |_, rng| !s.sample_signed(&g, true, rng).connected)
        .into_iter()
        .filter(|&a| a)
        .count();
    rep.push(rate(apart, n, (-2.0 * s.mass).exp(), "P[x not<-> y | same-sign pins]"));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_law_converges() {
        let tv_100 = crossing_limit_tv(100, 1.0, 1.0, 1.0).unwrap();
        let tv_1000 = crossing_limit_tv(1000, 1.0, 1.0, 1.0).unwrap();
        assert!(tv_1000 < tv_100);
        assert!(tv_1000 < 0.02);
    }
}
