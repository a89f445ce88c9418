//! Crossing parities, cycle space sampling and parity-conditioned counts.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    #[default]
    None,
    Even,
    Odd,
}

impl Parity {
    pub fn admits(self, n: u64) -> bool {
        match self {
            Parity::None => true,
            Parity::Even => n % 2 == 0,
            Parity::Odd => n % 2 == 1,
        }
    }
}

/// Per-edge crossing information: optional counts, parities and the open set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingState {
    pub counts: Option<Vec<u64>>,
    pub parity: Vec<bool>,
    pub open: Vec<bool>,
}

impl CrossingState {
    pub fn from_counts(counts: Vec<u64>, open: Vec<bool>) -> Self {
        let parity = counts.iter().map(|c| c % 2 == 1).collect();
        CrossingState { counts: Some(counts), parity, open }
    }

    /// Every vertex meets an even number of odd edges.
    pub fn is_even(&self, n_vertices: usize, edges: &[(usize, usize)]) -> bool {
        is_even_subgraph(n_vertices, edges, &self.parity)
    }
}

pub fn is_even_subgraph(n_vertices: usize, edges: &[(usize, usize)], chosen: &[bool]) -> bool {
    let mut deg = vec![0u8; n_vertices];
    for (&(u, v), &c) in edges.iter().zip(chosen) {
        if c {
            deg[u] ^= 1;
            deg[v] ^= 1;
        }
    }
    deg.iter().all(|&d| d == 0)
}

/// Fundamental cycles of a breadth-first spanning forest, each rooted at
/// the lowest vertex id of its component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleBasis {
    pub n_edges: usize,
    pub cycles: Vec<Vec<usize>>,
    pub components: usize,
}

impl CycleBasis {
    pub fn dimension(&self) -> usize {
        self.cycles.len()
    }
}

pub fn cycle_basis(n_vertices: usize, edges: &[(usize, usize)], include: &[bool]) -> CycleBasis {
    let mut adj = vec![Vec::new(); n_vertices];
    let mut touched = vec![false; n_vertices];
    for (id, (&(u, v), &inc)) in edges.iter().zip(include).enumerate() {
        if inc {
            adj[u].push((id, v));
            adj[v].push((id, u));
            touched[u] = true;
            touched[v] = true;
        }
    }
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n_vertices];
    let mut depth = vec![usize::MAX; n_vertices];
    let mut tree = vec![false; edges.len()];
    let mut components = 0;
    for root in 0..n_vertices {
        if !touched[root] || depth[root] != usize::MAX {
            continue;
        }
        components += 1;
        depth[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(e, w) in &adj[u] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[u] + 1;
                    parent[w] = Some((e, u));
                    tree[e] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    let mut cycles = Vec::new();
    for (id, (&(u, v), &inc)) in edges.iter().zip(include).enumerate() {
        if !inc || tree[id] {
            continue;
        }
        let mut cyc = vec![id];
        let (mut a, mut b) = (u, v);
        while a != b {
            if depth[a] >= depth[b] {
                let (e, p) = parent[a].expect("non-root has parent");
                cyc.push(e);
                a = p;
            } else {
                let (e, p) = parent[b].expect("non-root has parent");
                cyc.push(e);
                b = p;
            }
        }
        cyc.sort_unstable();
        cycles.push(cyc);
    }
    CycleBasis { n_edges: edges.len(), cycles, components }
}

/// Uniform even subgraph: XOR of the fundamental cycles picked by fair coins.
pub fn sample_even_subgraph<R: Rng + ?Sized>(basis: &CycleBasis, rng: &mut R) -> Vec<bool> {
    let mut out = vec![false; basis.n_edges];
    for cyc in &basis.cycles {
        if rng.gen::<bool>() {
            for &e in cyc {
                out[e] ^= true;
            }
        }
    }
    out
}

/// Flips the parity of every edge in `cycle`; counts move by one in the
/// direction that keeps them non-negative.
pub fn switch_cycle(state: &CrossingState, cycle: &[usize]) -> Result<CrossingState> {
    if cycle.iter().any(|&e| !state.open[e]) {
        return Err(Error::CycleLeavesOpenSet);
    }
    let mut out = state.clone();
    for &e in cycle {
        out.parity[e] ^= true;
        if let Some(c) = out.counts.as_mut() {
            c[e] = if c[e] % 2 == 1 { c[e] - 1 } else { c[e] + 1 };
        }
    }
    Ok(out)
}

pub fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// Poisson(`mean`) conditioned on the parity class.
pub fn conditioned_poisson<R: Rng + ?Sized>(mean: f64, parity: Parity, rng: &mut R) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::InvalidConfig(format!("Poisson mean {mean}")));
    }
    match parity {
        Parity::None => return Ok(poisson(mean, rng)),
        Parity::Odd if mean == 0.0 => return Err(Error::OddWithZeroMean),
        Parity::Even if mean == 0.0 => return Ok(0),
        _ => {}
    }
    if mean > 30.0 {
        loop {
            let n = poisson(mean, rng);
            if parity.admits(n) {
                return Ok(n);
            }
        }
    }
    let (mut n, mut term) = match parity {
        Parity::Even => (0u64, 1.0 / mean.cosh()),
        _ => (1u64, mean / mean.sinh()),
    };
    let u: f64 = rng.gen();
    let mut cum = term;
    while cum < u && term > 0.0 {
        term *= mean * mean / (((n + 1) * (n + 2)) as f64);
        n += 2;
        cum += term;
    }
    Ok(n)
}

/// Probability mass of the parity-conditioned Poisson law on `0..len`.
pub fn conditioned_poisson_pmf(mean: f64, parity: Parity, len: usize) -> Result<Vec<f64>> {
    if parity == Parity::Odd && mean == 0.0 {
        return Err(Error::OddWithZeroMean);
    }
    let norm = match parity {
        Parity::None => 1.0,
        Parity::Even => (1.0 + (-2.0 * mean).exp()) / 2.0,
        Parity::Odd => -(-2.0 * mean).exp_m1() / 2.0,
    };
    Ok((0..len)
        .map(|n| {
            if !parity.admits(n as u64) {
                return 0.0;
            }
            let lp = if mean == 0.0 {
                if n == 0 { 0.0 } else { f64::NEG_INFINITY }
            } else {
                -mean + n as f64 * mean.ln() - ln_gamma(n as f64 + 1.0)
            };
            lp.exp() / norm
        })
        .collect())
}

/// Law of the number `t` of crossing pairs for a two-point chain with
/// `a_visits` visits to `x`, `b_visits` to `y` and one-step weights
/// `p_xx`, `p_yy`, `p_xy`: weight proportional to
/// `(p_xy^2 / (p_xx p_yy))^t / ((2t)! (A - t)! (B - t)!)`.
/// Index `t` of the result is the probability of `2t` crossings.
pub fn crossing_pmf_discrete(a_visits: u64, b_visits: u64, p_xx: f64, p_yy: f64, p_xy: f64) -> Result<Vec<f64>> {
    for p in [p_xx, p_yy, p_xy] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
    }
    if p_xx == 0.0 || p_yy == 0.0 {
        return Err(Error::InvalidProbability(0.0));
    }
    let tmax = a_visits.min(b_visits);
    if p_xy == 0.0 {
        let mut v = vec![0.0; tmax as usize + 1];
        v[0] = 1.0;
        return Ok(v);
    }
    let ratio = 2.0 * p_xy.ln() - p_xx.ln() - p_yy.ln();
    let logw: Vec<f64> = (0..=tmax)
        .map(|t| {
            let t = t as f64;
            t * ratio
                - ln_gamma(2.0 * t + 1.0)
                - ln_gamma(a_visits as f64 - t + 1.0)
                - ln_gamma(b_visits as f64 - t + 1.0)
        })
        .collect();
    let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let s: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / s).collect())
}

/// Parity of the number of odd edges of a cluster crossed by a ray.
pub fn winding_parity(parity: &[bool], cluster_edges: &[usize], ray: &[bool]) -> bool {
    cluster_edges.iter().filter(|&&e| ray[e] && parity[e]).count() % 2 == 1
}

/// A cluster winds around the face when some cycle in it crosses the ray
/// an odd number of times.
pub fn winds_around(basis: &CycleBasis, ray: &[bool]) -> bool {
    basis
        .cycles
        .iter()
        .any(|c| c.iter().filter(|&&e| ray[e]).count() % 2 == 1)
}
