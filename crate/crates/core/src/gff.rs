//! Gaussian free field sampling, conditioning on pinned values, Lupu edge
//! opening and sign clusters.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::CableGraph;
use crate::green::{green, harmonic_extension, GreenOperator};

/// One field draw: values on every vertex (boundary included) and the
/// open/closed state of every edge.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub values: Vec<f64>,
    pub open: Vec<bool>,
}

impl FieldSample {
    pub fn occupation(&self, v: usize) -> f64 {
        self.values[v] * self.values[v]
    }
}

/// Centred field with covariance `G`, zero on the boundary.
pub fn sample_field<R: Rng + ?Sized>(gr: &GreenOperator, rng: &mut R) -> Vec<f64> {
    let n = gr.interior().len();
    let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let x = gr.factor() * z;
    let mut out = vec![0.0; gr.n_vertices()];
    for (i, &v) in gr.interior().iter().enumerate() {
        out[v] = x[i];
    }
    out
}

/// Field conditioned on its values at a fixed set of pins:
/// a Dirichlet field on the graph with pins removed plus the harmonic
/// extension of the pinned values.
#[derive(Debug, Clone)]
pub struct PinnedField {
    pins: Vec<usize>,
    reduced: GreenOperator,
    basis: Vec<Vec<f64>>,
}

impl PinnedField {
    pub fn new(g: &CableGraph, pins: &[usize]) -> Result<Self> {
        for (i, &p) in pins.iter().enumerate() {
            if pins[..i].contains(&p) {
                return Err(Error::SameVertex(g.label(p).to_string()));
            }
        }
        let reduced = green(&g.with_extra_boundary(pins))?;
        let basis = pins
            .iter()
            .map(|&p| harmonic_extension(g, &pins.iter().map(|&q| (q, (q == p) as u8 as f64)).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        Ok(PinnedField { pins: pins.to_vec(), reduced, basis })
    }

    pub fn pins(&self) -> &[usize] {
        &self.pins
    }

    /// Green operator of the graph with the pins made Dirichlet.
    pub fn reduced_green(&self) -> &GreenOperator {
        &self.reduced
    }

    /// Harmonic function equal to one at pin `i` and zero at the other pins and the boundary.
    pub fn harmonic(&self, i: usize) -> &[f64] {
        &self.basis[i]
    }

    pub fn mean(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.reduced.n_vertices()];
        for (phi, &val) in self.basis.iter().zip(values) {
            for (o, p) in out.iter_mut().zip(phi) {
                *o += val * p;
            }
        }
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, values: &[f64], rng: &mut R) -> Vec<f64> {
        let mut out = sample_field(&self.reduced, rng);
        for (o, m) in out.iter_mut().zip(self.mean(values)) {
            *o += m;
        }
        out
    }
}

/// One-off conditional draw given pinned values.
pub fn condition_on_values<R: Rng + ?Sized>(
    g: &CableGraph,
    pins: &[(usize, f64)],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let vs: Vec<usize> = pins.iter().map(|p| p.0).collect();
    let vals: Vec<f64> = pins.iter().map(|p| p.1).collect();
    Ok(PinnedField::new(g, &vs)?.sample(&vals, rng))
}

/// Probability that the bridge between endpoint values stays off zero.
pub fn lupu_open_probability(gu: f64, gv: f64, resistance: f64) -> f64 {
    if gu * gv <= 0.0 {
        0.0
    } else {
        -(-2.0 * gu * gv / resistance).exp_m1()
    }
}

pub fn lupu_edge_open<R: Rng + ?Sized>(gu: f64, gv: f64, resistance: f64, rng: &mut R) -> bool {
    let p = lupu_open_probability(gu, gv, resistance);
    p > 0.0 && rng.gen::<f64>() < p
}

pub fn open_edges<R: Rng + ?Sized>(g: &CableGraph, values: &[f64], rng: &mut R) -> Vec<bool> {
    g.edges()
        .iter()
        .map(|e| lupu_edge_open(values[e.u], values[e.v], e.resistance, rng))
        .collect()
}

pub fn sample_with_edges<R: Rng + ?Sized>(g: &CableGraph, gr: &GreenOperator, rng: &mut R) -> FieldSample {
    let values = sample_field(gr, rng);
    let open = open_edges(g, &values, rng);
    FieldSample { values, open }
}

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Connected components of the open edges. Cluster ids are numbered in
/// order of their lowest vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    pub cluster: Vec<usize>,
    pub count: usize,
}

impl ClusterPartition {
    pub fn connected(&self, u: usize, v: usize) -> bool {
        self.cluster[u] == self.cluster[v]
    }

    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.cluster.len()).filter(|&v| self.cluster[v] == c).collect()
    }
}

pub fn clusters(n: usize, endpoints: impl IntoIterator<Item = (usize, usize)>) -> ClusterPartition {
    let mut uf = UnionFind::new(n);
    for (u, v) in endpoints {
        uf.union(u, v);
    }
    let mut id = vec![usize::MAX; n];
    let mut cluster = vec![0; n];
    let mut count = 0;
    for v in 0..n {
        let r = uf.find(v);
        if id[r] == usize::MAX {
            id[r] = count;
            count += 1;
        }
        cluster[v] = id[r];
    }
    ClusterPartition { cluster, count }
}

pub fn open_clusters(g: &CableGraph, open: &[bool]) -> ClusterPartition {
    clusters(
        g.n_vertices(),
        g.edges().iter().zip(open).filter(|(_, &o)| o).map(|(e, _)| (e.u, e.v)),
    )
}

/// `P[same sign | |g(x)| = a, |g(y)| = b] = e^m / (e^m + e^-m)`.
pub fn p_same_sign(m: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * m).exp())
}

/// `P[x <-> y | occupations] = tanh m`.
pub fn prob_connected(m: f64) -> f64 {
    m.tanh()
}

/// `P[x <-> y | same-sign pins] = 1 - e^{-2m}`.
pub fn prob_connected_same_sign(m: f64) -> f64 {
    -(-2.0 * m).exp_m1()
}

/// Field conditioned on `|g(x)| = a`, `|g(y)| = b` with the relative sign
/// drawn from its conditional law.
#[derive(Debug, Clone)]
pub struct TwoPointSampler {
    pub x: usize,
    pub y: usize,
    pub a: f64,
    pub b: f64,
    pub mass: f64,
    field: PinnedField,
}

#[derive(Debug, Clone)]
pub struct TwoPointDraw {
    pub same_sign: bool,
    pub connected: bool,
    pub sample: FieldSample,
}

impl TwoPointSampler {
    pub fn new(g: &CableGraph, x: usize, y: usize, a: f64, b: f64) -> Result<Self> {
        if x == y {
            return Err(Error::SameVertex(g.label(x).to_string()));
        }
        let mass = crate::green::two_point_mass(g, x, y, a, b)?;
        Ok(TwoPointSampler { x, y, a, b, mass, field: PinnedField::new(g, &[x, y])? })
    }

    pub fn field(&self) -> &PinnedField {
        &self.field
    }

    /// Draw with the relative sign forced.
    pub fn sample_signed<R: Rng + ?Sized>(&self, g: &CableGraph, same_sign: bool, rng: &mut R) -> TwoPointDraw {
        let b = if same_sign { self.b } else { -self.b };
        let values = self.field.sample(&[self.a, b], rng);
        let open = open_edges(g, &values, rng);
        let connected = open_clusters(g, &open).connected(self.x, self.y);
        TwoPointDraw { same_sign, connected, sample: FieldSample { values, open } }
    }

    pub fn sample<R: Rng + ?Sized>(&self, g: &CableGraph, rng: &mut R) -> TwoPointDraw {
        let same = rng.gen::<f64>() < p_same_sign(self.mass);
        self.sample_signed(g, same, rng)
    }
}
