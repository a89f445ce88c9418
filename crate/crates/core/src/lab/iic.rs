//! Occupation near the origin of a wired box, conditioned on the origin
//! reaching the boundary.
//!
//! Two overlays are built on each box size. Weighted: the free field
//! reweighted by `|g(0)|`, so the value at the origin is Rayleigh, plus one
//! excursion from the origin to the boundary. Punctured: the field with a
//! Dirichlet condition at the origin plus one such excursion. Both are
//! compared across box sizes, and the weighted one against the field with a
//! small boundary value conditioned by rejection on the origin reaching the
//! boundary.

use rand::Rng;

use crate::error::{Error, Result};
use crate::excursions::{ExcursionEnsemble, HWalk};
use crate::gff::{open_clusters, open_edges, sample_field, PinnedField};
use crate::graph::{box3, CableGraph, WIRED_LABEL};
use crate::green::{effective_conductance, green};
use crate::lab::config::ExperimentConfig;
use crate::lab::report::{FunctionalResult, TestReport};
use crate::seed::replicate;
use crate::stats::{ks_two_sample, mean_se};

pub const ORIGIN: &str = "0,0,0";
pub const DEFAULT_PROBES: [&str; 4] = ["0,0,0", "1,0,0", "1,1,0", "2,0,0"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overlay {
    Weighted,
    Punctured,
}

struct BoxSetup {
    g: CableGraph,
    o: usize,
    probes: Vec<usize>,
    sigma: f64,
    punctured: PinnedField,
    to_boundary: HWalk,
}

impl BoxSetup {
    fn new(l: usize, probes: &[String]) -> Result<Self> {
        let g = box3(l)?;
        let o = g.vertex(ORIGIN)?;
        let bd = g.vertex(WIRED_LABEL)?;
        let probes = probes.iter().map(|p| g.vertex(p)).collect::<Result<Vec<_>>>()?;
        let sigma = green(&g)?.get(o, o).sqrt();
        let punctured = PinnedField::new(&g, &[o])?;
        let to_boundary = HWalk::new(&g, o, bd, &[])?;
        Ok(BoxSetup { g, o, probes, sigma, punctured, to_boundary })
    }

    /// Mean of the squared field part at probe `i`; the Rayleigh value has
    /// second moment `2 sigma^2`.
    fn field_mean(&self, overlay: Overlay, i: usize) -> f64 {
        let z = self.probes[i];
        let g0 = self.punctured.reduced_green().get(z, z);
        match overlay {
            Overlay::Weighted => g0 + 2.0 * self.sigma * self.sigma * self.punctured.harmonic(0)[z].powi(2),
            Overlay::Punctured => g0,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, overlay: Overlay, rng: &mut R) -> Result<Vec<f64>> {
        let a = match overlay {
            Overlay::Weighted => self.sigma * (-2.0 * (1.0 - rng.gen::<f64>()).ln()).sqrt(),
            Overlay::Punctured => 0.0,
        };
        let field = self.punctured.sample(&[a], rng);
        let mut ex = ExcursionEnsemble::empty(&self.g);
        ex.push(self.to_boundary.sample(rng)?);
        Ok(self.probes.iter().map(|&z| field[z] * field[z] + ex.occupation(z)).collect())
    }
}

/// Field with value `pin` on the wired boundary, conditioned on the origin
/// reaching it through a sign cluster. Returns probe occupations and the
/// number of attempts.
fn sample_direct<R: Rng + ?Sized>(s: &BoxSetup, field: &PinnedField, bd: usize, pin: f64, rng: &mut R) -> (Vec<f64>, u64) {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let values = field.sample(&[pin], rng);
        let open = open_edges(&s.g, &values, rng);
        if open_clusters(&s.g, &open).connected(s.o, bd) {
            return (s.probes.iter().map(|&z| values[z] * values[z]).collect(), attempts);
        }
    }
}

/// `P[origin <-> boundary]` with boundary value `pin`: the origin is
/// `N(pin, G(0,0))` and, on the same sign, connects with probability
/// `1 - exp(-2 g(0) pin c)`.
pub fn direct_acceptance(sigma: f64, pin: f64, c: f64) -> f64 {
    let n = 20_000;
    let (lo, hi) = (0.0, pin + 12.0 * sigma);
    let h = (hi - lo) / n as f64;
    let f = |x: f64| {
        let z = (x - pin) / sigma;
        (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()) * -(-2.0 * x * pin * c).exp_m1()
    };
    let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
    (inner + 0.5 * (f(lo) + f(hi))) * h
}

fn columns(rows: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = (0..k).map(|i| rows.iter().map(|r| r[i]).collect()).collect();
    cols.push(rows.iter().map(|r| r.iter().sum()).collect());
    cols
}

pub fn run_iic_experiment(cfg: &ExperimentConfig) -> Result<TestReport> {
    cfg.validate()?;
    let (l1, l2) = (cfg.box_sizes[0], cfg.box_sizes[1]);
    let probes: Vec<String> = if cfg.probes.is_empty() {
        DEFAULT_PROBES.iter().map(|s| s.to_string()).collect()
    } else {
        cfg.probes.clone()
    };
    if !(cfg.pin > 0.0) {
        return Err(Error::InvalidConfig(format!("boundary value {} must be positive", cfg.pin)));
    }
    let small = BoxSetup::new(l1, &probes)?;
    let large = BoxSetup::new(l2, &probes)?;
    let n = cfg.replicas;
    let k = probes.len();
    let mut names: Vec<String> = probes.iter().map(|p| format!("occupation at {p}")).collect();
    names.push("occupation summed over probes".into());
    let threshold = cfg.alpha / (3 * (k + 1)) as f64;

    let mut rep = TestReport::new(cfg.kind.name(), cfg.seed, n);
    rep.note("box sizes", format!("{l1} {l2}"));
    rep.note("boundary value", cfg.pin);
    rep.note("sigma at origin", format!("{:.6} {:.6}", small.sigma, large.sigma));

    let mut weighted_small = Vec::new();
    for (overlay, tag) in [(Overlay::Weighted, "weighted"), (Overlay::Punctured, "punctured")] {
        let run = |s: &BoxSetup, size: usize| {
            replicate(n, cfg.seed, &format!("iic-{tag}-{size}"), |_, rng| s.sample(overlay, rng))
                .into_iter()
                .collect::<Result<Vec<_>>>()
        };
        let a = run(&small, l1)?;
        let b = run(&large, l2)?;
        for (i, (x, y)) in columns(&a, k).iter().zip(columns(&b, k)).enumerate() {
            rep.push(FunctionalResult::ks(format!("{tag} L={l1} vs L={l2}: {}", names[i]), n, ks_two_sample(x, &y)?, threshold));
        }
        let means = |s: &BoxSetup| (0..k).map(|i| format!("{:.5}", s.field_mean(overlay, i))).collect::<Vec<_>>().join(" ");
        rep.note(&format!("{tag} field mean at probes, L={l1}"), means(&small));
        rep.note(&format!("{tag} field mean at probes, L={l2}"), means(&large));
        if overlay == Overlay::Weighted {
            weighted_small = a;
        }
    }

    // direct conditioning on the small box
    let bd = small.g.vertex(WIRED_LABEL)?;
    let boundary_field = PinnedField::new(&small.g, &[bd])?;
    let direct = replicate(n, cfg.seed, "iic-direct", |_, rng| sample_direct(&small, &boundary_field, bd, cfg.pin, rng));
    let rows: Vec<Vec<f64>> = direct.iter().map(|d| d.0.clone()).collect();
    for (i, (x, y)) in columns(&rows, k).iter().zip(columns(&weighted_small, k)).enumerate() {
        rep.push(FunctionalResult::ks(format!("direct vs weighted L={l1}: {}", names[i]), n, ks_two_sample(x, &y)?, threshold));
    }
    let attempts: u64 = direct.iter().map(|d| d.1).sum();
    let c = effective_conductance(&small.g, small.o, bd)?;
    let want = direct_acceptance(small.sigma, cfg.pin, c);
    let se = (want * (1.0 - want) / attempts as f64).sqrt();
    rep.push(FunctionalResult::within_se("direct conditioning acceptance rate", attempts as usize, n as f64 / attempts as f64, se, want, 3.0));

    // the weight itself: |g(0)| has mean sigma sqrt(2 / pi)
    let gr = green(&small.g)?;
    let w: Vec<f64> = replicate(n, cfg.seed, "iic-weights", |_, rng| sample_field(&gr, rng)[small.o].abs());
    let (m, se) = mean_se(&w);
    rep.push(FunctionalResult::within_se(
        "mean reweighting factor |g(0)|",
        n,
        m,
        se,
        small.sigma * (2.0 / std::f64::consts::PI).sqrt(),
        3.0,
    ));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acceptance_quadrature_small_pin() {
        // to first order in the pin: 2 pin c E|g(0)|^+ = 2 pin c sigma / sqrt(2 pi)
        let (s, c, pin) = (0.5, 4.0, 1e-4);
        let p = direct_acceptance(s, pin, c);
        let first = 2.0 * pin * c * s / (2.0 * std::f64::consts::PI).sqrt();
        assert!((p / first - 1.0).abs() < 1e-2, "{p} {first}");
    }

    #[test]
    fn boundary_conductance_is_inverse_green() {
        let g = box3(4).unwrap();
        let o = g.vertex(ORIGIN).unwrap();
        let bd = g.vertex(WIRED_LABEL).unwrap();
        let c = effective_conductance(&g, o, bd).unwrap();
        assert!((c * green(&g).unwrap().get(o, o) - 1.0).abs() < 1e-10);
    }
}
