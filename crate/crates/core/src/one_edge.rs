//! Single-edge decomposition on a uniform time grid.
//!
//! The field along an edge of unit length is a Brownian bridge. Its square,
//! conditioned to stay positive, decomposes into two absorbed
//! zero-dimensional squared Bessel flows from the ends plus a squared
//! Bessel bridge from 0 to 0 whose dimension is one plus twice a
//! parity-conditioned Poisson count.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::gff::p_same_sign;
use crate::loops::{conditioned_poisson, poisson, Parity};

pub const MIN_STEPS: usize = 100;

/// Values at `t = k / n`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub values: Vec<f64>,
}

impl GridPath {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.steps() as f64
    }

    /// Value at the grid point nearest to `t`.
    pub fn at(&self, t: f64) -> f64 {
        self.values[(t * self.steps() as f64).round() as usize]
    }

    /// Trapezoidal integral over `[0, 1]`.
    pub fn integral(&self) -> f64 {
        let v = &self.values;
        let inner: f64 = v[1..v.len() - 1].iter().sum();
        (inner + 0.5 * (v[0] + v[v.len() - 1])) * self.delta()
    }

    pub fn reversed(&self) -> GridPath {
        GridPath { values: self.values.iter().rev().copied().collect() }
    }
}

fn check_steps(n: usize) -> Result<()> {
    if n < MIN_STEPS {
        return Err(Error::InvalidGrid(format!("{n} steps, need at least {MIN_STEPS}")));
    }
    Ok(())
}

fn bridge_values<R: Rng + ?Sized>(a: f64, b: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let dt = 1.0 / n as f64;
    let mut v = Vec::with_capacity(n + 1);
    let mut x = a;
    v.push(x);
    for i in 0..n - 1 {
        let rem = 1.0 - i as f64 * dt;
        let mean = x + (b - x) * dt / rem;
        let var = dt * (rem - dt) / rem;
        x = mean + var.sqrt() * rng.sample::<f64, _>(StandardNormal);
        v.push(x);
    }
    v.push(b);
    v
}

/// Brownian bridge from `a` to `b` on `[0, 1]`, exact at the grid points.
pub fn sample_bridge<R: Rng + ?Sized>(a: f64, b: f64, n: usize, rng: &mut R) -> Result<GridPath> {
    check_steps(n)?;
    Ok(GridPath { values: bridge_values(a, b, n, rng) })
}

/// Bridge conditioned to stay positive, by rejection. Each grid step is
/// also checked for an unseen zero between its endpoints. Returns the path
/// and the number of attempts.
pub fn condition_positive<R: Rng + ?Sized>(a: f64, b: f64, n: usize, rng: &mut R) -> Result<(GridPath, u64)> {
    check_steps(n)?;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidConfig(format!("endpoints must be positive, got {a}, {b}")));
    }
    let dt = 1.0 / n as f64;
    let mut attempts = 0;
    'outer: loop {
        attempts += 1;
        let v = bridge_values(a, b, n, rng);
        for w in v.windows(2) {
            if w[1] <= 0.0 || rng.gen::<f64>() < (-2.0 * w[0] * w[1] / dt).exp() {
                continue 'outer;
            }
        }
        return Ok((GridPath { values: v }, attempts));
    }
}

/// Exact transition of the zero-dimensional squared Bessel process over `dt`:
/// absorbed with probability `exp(-x / (2 dt))`, otherwise a Gamma variable
/// of Poisson shape and scale `2 dt`.
pub fn besq0_step<R: Rng + ?Sized>(x: f64, dt: f64, rng: &mut R) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = poisson(x / (2.0 * dt), rng);
    if k == 0 {
        0.0
    } else {
        Gamma::new(k as f64, 2.0 * dt).expect("valid gamma").sample(rng)
    }
}

pub fn sample_besq0<R: Rng + ?Sized>(x0: f64, n: usize, rng: &mut R) -> Result<GridPath> {
    check_steps(n)?;
    let dt = 1.0 / n as f64;
    let mut v = Vec::with_capacity(n + 1);
    let mut x = x0;
    v.push(x);
    for _ in 0..n {
        x = besq0_step(x, dt, rng);
        v.push(x);
    }
    Ok(GridPath { values: v })
}

/// Flow from `x0` conditioned to be absorbed before time 1.
pub fn sample_besq0_absorbed<R: Rng + ?Sized>(x0: f64, n: usize, rng: &mut R) -> Result<(GridPath, u64)> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let p = sample_besq0(x0, n, rng)?;
        if *p.values.last().expect("non-empty") == 0.0 {
            return Ok((p, attempts));
        }
    }
}

/// Squared Bessel bridge of integer dimension from 0 to 0: a sum of
/// `dim` squared standard bridges.
pub fn squared_bessel_bridge<R: Rng + ?Sized>(dim: u64, n: usize, rng: &mut R) -> Result<GridPath> {
    check_steps(n)?;
    let mut v = vec![0.0; n + 1];
    for _ in 0..dim {
        for (acc, x) in v.iter_mut().zip(bridge_values(0.0, 0.0, n, rng)) {
            *acc += x * x;
        }
    }
    Ok(GridPath { values: v })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpyDraw {
    pub crossings: u64,
    pub attempts_a: u64,
    pub attempts_b: u64,
}

/// Square root of the decomposition: absorbed flow from `a^2`, reversed
/// absorbed flow from `b^2`, and a squared Bessel bridge of dimension
/// `1 + 2 D` with `D ~ Poisson(a b c)` under the given parity.
pub fn sample_cpy_rhs<R: Rng + ?Sized>(
    a: f64,
    b: f64,
    n: usize,
    c: f64,
    parity: Parity,
    rng: &mut R,
) -> Result<(GridPath, CpyDraw)> {
    let (fa, attempts_a) = sample_besq0_absorbed(a * a, n, rng)?;
    let (fb, attempts_b) = sample_besq0_absorbed(b * b, n, rng)?;
    let d = conditioned_poisson(a * b * c, parity, rng)?;
    let loops = squared_bessel_bridge(1 + 2 * d, n, rng)?;
    let fb = fb.reversed();
    let values = (0..=n)
        .map(|k| (fa.values[k] + fb.values[k] + loops.values[k]).sqrt())
        .collect();
    Ok((GridPath { values }, CpyDraw { crossings: d, attempts_a, attempts_b }))
}

/// Bridge of reflected Brownian motion between `a` and `b`: the relative
/// sign is drawn first, then the absolute value of an ordinary bridge.
pub fn reflected_bridge<R: Rng + ?Sized>(a: f64, b: f64, n: usize, rng: &mut R) -> Result<GridPath> {
    let same = rng.gen::<f64>() < p_same_sign(a * b);
    let p = sample_bridge(a, if same { b } else { -b }, n, rng)?;
    Ok(GridPath { values: p.values.into_iter().map(f64::abs).collect() })
}
