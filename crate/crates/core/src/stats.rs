//! Two-sample Kolmogorov-Smirnov, chi-square and mean/SE helpers.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov tail `Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsResult> {
    let n = xs.len().min(ys.len());
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples(n));
    }
    let (a, b) = (sorted(xs), sorted(ys));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p(d, na * nb / (na + nb)),
    })
}

pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if xs.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples(xs.len()));
    }
    let a = sorted(xs);
    let n = a.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in a.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
    }
    Ok(KsResult {
        statistic: d,
        p_value: ks_p(d, n),
    })
}

fn chi_p(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    1.0 - dist.cdf(stat)
}

/// Goodness of fit against expected counts, `dof = cells - 1 - fitted`.
pub fn chi_square(observed: &[f64], expected: &[f64], fitted: usize) -> Result<ChiSquareResult> {
    let n: f64 = observed.iter().sum();
    if (n as usize) < MIN_SAMPLES {
        return Err(Error::TooFewSamples(n as usize));
    }
    let stat = observed
        .iter()
        .zip(expected)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| (o - e) * (o - e) / e)
        .sum();
    let dof = observed.len().saturating_sub(1 + fitted);
    Ok(ChiSquareResult {
        statistic: stat,
        dof,
        p_value: chi_p(stat, dof),
    })
}

/// Homogeneity test between two count vectors over the same cells.
pub fn chi_square_two_sample(a: &[f64], b: &[f64]) -> Result<ChiSquareResult> {
    let (na, nb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (na.min(nb) as usize) < MIN_SAMPLES {
        return Err(Error::TooFewSamples(na.min(nb) as usize));
    }
    let mut stat = 0.0;
    let mut cells = 0;
    for (&x, &y) in a.iter().zip(b) {
        let tot = x + y;
        if tot == 0.0 {
            continue;
        }
        cells += 1;
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let dof = cells.max(1) - 1;
    Ok(ChiSquareResult {
        statistic: stat,
        dof,
        p_value: chi_p(stat, dof),
    })
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Frequency of `true` and its binomial standard error under `p`.
pub fn frequency(hits: usize, n: usize, p: f64) -> (f64, f64) {
    let n = n as f64;
    (hits as f64 / n, (p * (1.0 - p) / n).sqrt())
}

/// Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Total variation distance between two probability vectors, padding with zeros.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    (0..n)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn kolmogorov_tail_values() {
        // Q(1.36) ~ 0.049, Q(1.63) ~ 0.0098
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 1e-3);
    }

    #[test]
    fn identical_samples_have_p_one() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = ks_two_sample(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn shifted_normals_fail() {
        let mut rng = stream(1, 0, 0);
        let nrm = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|_| nrm.sample(&mut rng)).collect();
        let ys: Vec<f64> = (0..10_000).map(|_| nrm.sample(&mut rng) + 0.1).collect();
        assert!(ks_two_sample(&xs, &ys).unwrap().p_value < 1e-6);
    }

    #[test]
    fn too_few_samples() {
        let xs = vec![0.0; 49];
        assert!(matches!(ks_two_sample(&xs, &xs), Err(Error::TooFewSamples(49))));
        assert!(matches!(chi_square(&[10.0, 39.0], &[24.5, 24.5], 0), Err(Error::TooFewSamples(49))));
    }

    #[test]
    fn uniform_p_values_are_uniform() {
        let ps: Vec<f64> = (0..100)
            .map(|r| {
                let mut rng = stream(5, 1, r);
                let xs: Vec<f64> = (0..10_000).map(|_| rng.gen()).collect();
                let ys: Vec<f64> = (0..10_000).map(|_| rng.gen()).collect();
                ks_two_sample(&xs, &ys).unwrap().p_value
            })
            .collect();
        let meta = ks_one_sample(&ps, |p| p.clamp(0.0, 1.0)).unwrap();
        assert!(meta.p_value > 0.01, "meta p = {}", meta.p_value);
    }

    #[test]
    fn chi_square_matches_table() {
        // statistic 3.84 with 1 dof sits at p = 0.05
        let r = chi_square(&[59.8, 40.2], &[50.0, 50.0], 0).unwrap();
        assert!((r.statistic - 3.8416).abs() < 1e-3);
        assert!((r.p_value - 0.05).abs() < 1e-3);
    }
}
