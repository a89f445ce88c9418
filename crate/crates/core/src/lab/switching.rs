//! Occupation field of the field conditioned on `x <-> y` against its
//! excursion description.

use rand::Rng;

use crate::error::Result;
use crate::excursions::{sample_xx_ensemble, sample_xy_ensemble, HWalk};
use crate::gff::{sample_field, TwoPointSampler};
use crate::graph::CableGraph;
use crate::lab::config::{ExperimentConfig, NegativeControl, MASS_SCALE};
use crate::lab::report::{FunctionalResult, TestReport};
use crate::loops::Parity;
use crate::seed::replicate;
use crate::stats::{ks_two_sample, mean_se};

pub struct SwitchingSetup {
    pub base: CableGraph,
    pub graph: CableGraph,
    pub x: usize,
    pub y: usize,
    pub a: f64,
    pub b: f64,
    pub probes: Vec<usize>,
    pub sampler: TwoPointSampler,
    xx: HWalk,
    yy: HWalk,
    xy: HWalk,
}

/// What the right-hand side draws for the crossing excursions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingRule {
    pub parity: Parity,
    pub mass_scale: f64,
}

impl CrossingRule {
    pub const ODD: CrossingRule = CrossingRule { parity: Parity::Odd, mass_scale: 1.0 };

    pub fn for_control(nc: Option<NegativeControl>) -> Self {
        match nc {
            Some(NegativeControl::ParityEven) => CrossingRule { parity: Parity::Even, mass_scale: 1.0 },
            Some(NegativeControl::MassScale) => CrossingRule { parity: Parity::Odd, mass_scale: MASS_SCALE },
            _ => CrossingRule::ODD,
        }
    }
}

impl SwitchingSetup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let (base, graph) = cfg.graph()?;
        let (x, y) = cfg.marks(&base)?;
        let probes = cfg.probe_vertices(&base, &graph, x, y)?;
        let sampler = TwoPointSampler::new(&graph, x, y, cfg.a, cfg.b)?;
        let xx = HWalk::new(&graph, x, x, &[y])?;
        let yy = HWalk::new(&graph, y, y, &[x])?;
        let xy = HWalk::new(&graph, x, y, &[])?;
        Ok(SwitchingSetup { base, graph, x, y, a: cfg.a, b: cfg.b, probes, sampler, xx, yy, xy })
    }

    pub fn mass(&self) -> f64 {
        self.sampler.mass
    }

    pub fn probe_label(&self, i: usize) -> &str {
        self.graph.label(self.probes[i])
    }

    /// Field conditioned on `|g(x)| = a`, `|g(y)| = b` and `x <-> y`, by
    /// rejection. Returns probe occupations and the number of attempts.
    pub fn sample_lhs<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, u64) {
        let mut attempts = 0;
        loop {
            attempts += 1;
            let d = self.sampler.sample(&self.graph, rng);
            if d.connected {
                return (self.probes.iter().map(|&z| d.sample.occupation(z)).collect(), attempts);
            }
        }
    }

    /// Dirichlet field squared plus return excursions at both ends plus
    /// crossing excursions.
    pub fn sample_rhs<R: Rng + ?Sized>(&self, rule: CrossingRule, rng: &mut R) -> Result<Vec<f64>> {
        let g = &self.graph;
        let base = sample_field(self.sampler.field().reduced_green(), rng);
        let ex = sample_xx_ensemble(g, &self.xx, self.a, rng)?;
        let ey = sample_xx_ensemble(g, &self.yy, self.b, rng)?;
        let exy = sample_xy_ensemble(g, &self.xy, self.a * rule.mass_scale, self.b, rule.parity, rng)?;
        Ok(self
            .probes
            .iter()
            .map(|&z| base[z] * base[z] + ex.occupation(z) + ey.occupation(z) + exy.occupation(z))
            .collect())
    }

    fn parts(&self, z: usize) -> (f64, f64, f64) {
        let f = self.sampler.field();
        (f.reduced_green().get(z, z), f.harmonic(0)[z], f.harmonic(1)[z])
    }

    /// `G_0(z,z) + (a phi_x(z) + b phi_y(z))^2`.
    pub fn unconditioned_mean(&self, z: usize) -> f64 {
        let (g0, p1, p2) = self.parts(z);
        g0 + (self.a * p1 + self.b * p2).powi(2)
    }

    /// Mean of the right-hand side with an odd crossing count.
    pub fn odd_mean(&self, z: usize) -> f64 {
        let (g0, p1, p2) = self.parts(z);
        let m = self.mass();
        g0 + (self.a * p1).powi(2) + (self.b * p2).powi(2) + 2.0 * self.a * self.b * p1 * p2 / m.tanh()
    }
}

fn column(rows: &[Vec<f64>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i]).collect()
}

fn sums(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().map(|r| r.iter().sum()).collect()
}

pub fn run_switching_test(cfg: &ExperimentConfig) -> Result<TestReport> {
    cfg.validate()?;
    let s = SwitchingSetup::new(cfg)?;
    let n = cfg.replicas;
    let rule = CrossingRule::for_control(cfg.negative_control);
    let mut rep = TestReport::new(cfg.kind.name(), cfg.seed, n);
    rep.note("graph", format!("{} refined x{}", cfg.graph, cfg.mesh));
    rep.note("marks", format!("{} {}", s.graph.label(s.x), s.graph.label(s.y)));
    rep.note("mass", format!("{:.6}", s.mass()));
    rep.note("crossing parity", format!("{:?}", rule.parity).to_lowercase());
    rep.note("crossing mass scale", rule.mass_scale);
    rep.note("return intensity", crate::excursions::RETURN_INTENSITY);
    rep.note("occupation per local time", crate::excursions::OCCUPATION_SCALE);
    if cfg.a <= 0.05 && cfg.b <= 0.05 {
        rep.note("mode", "limit test (boundary points, small pinned values)");
    }
    if let Some(nc) = cfg.negative_control {
        rep.note("negative control", format!("{nc:?}"));
    }

    let lhs = replicate(n, cfg.seed, "switching-lhs", |_, rng| s.sample_lhs(rng));
    let rhs = replicate(n, cfg.seed, "switching-rhs", |_, rng| s.sample_rhs(rule, rng))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let lhs_rows: Vec<Vec<f64>> = lhs.iter().map(|r| r.0.clone()).collect();
    let attempts: u64 = lhs.iter().map(|r| r.1).sum();

    let k = s.probes.len() + 1;
    let threshold = cfg.alpha / k as f64;
    for i in 0..s.probes.len() {
        let r = ks_two_sample(&column(&lhs_rows, i), &column(&rhs, i))?;
        rep.push(FunctionalResult::ks(format!("occupation at {}", s.probe_label(i)), n, r, threshold));
    }
    let r = ks_two_sample(&sums(&lhs_rows), &sums(&rhs))?;
    rep.push(FunctionalResult::ks("occupation summed over probes", n, r, threshold));

    let want = s.mass().tanh();
    let rate = n as f64 / attempts as f64;
    let se = (want * (1.0 - want) / attempts as f64).sqrt();
    rep.push(FunctionalResult::within_se("conditioning acceptance rate", attempts as usize, rate, se, want, 3.0));

    let (m, se) = crate::stats::mean_se(&sums(&rhs));
    let odd_ref: f64 = s.probes.iter().map(|&z| s.odd_mean(z)).sum();
    rep.push(FunctionalResult::within_se("excursion side mean, summed", n, m, se, odd_ref, 3.0));

    // calibration gate: unconstrained crossing count reproduces the Gaussian moment
    let free = CrossingRule { parity: Parity::None, mass_scale: 1.0 };
    let dyn_rows = replicate(n, cfg.seed, "switching-calibration", |_, rng| s.sample_rhs(free, rng))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    for (i, &z) in s.probes.iter().enumerate() {
        let (m, se) = mean_se(&column(&dyn_rows, i));
        rep.push(FunctionalResult::within_se(
            format!("calibration mean at {}", s.probe_label(i)),
            n,
            m,
            se,
            s.unconditioned_mean(z),
            3.0,
        ));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::config::ExperimentKind;
    use crate::seed::stream;

    #[test]
    fn analytic_means_agree_in_the_free_case() {
        let cfg = ExperimentConfig::for_kind(ExperimentKind::Switching);
        let s = SwitchingSetup::new(&cfg).unwrap();
        // odd mean exceeds the unconstrained one only through the crossing term
        for &z in &s.probes {
            assert!(s.odd_mean(z) >= s.unconditioned_mean(z) - 1e-12);
        }
        assert!((s.mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rhs_is_reproducible() {
        let cfg = ExperimentConfig::for_kind(ExperimentKind::Switching);
        let s = SwitchingSetup::new(&cfg).unwrap();
        let a = s.sample_rhs(CrossingRule::ODD, &mut stream(3, 0, 0)).unwrap();
        let b = s.sample_rhs(CrossingRule::ODD, &mut stream(3, 0, 0)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|&v| v >= 0.0));
    }
}
