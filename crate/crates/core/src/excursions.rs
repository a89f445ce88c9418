//! Excursions between marked vertices at vertex resolution.
//!
//! An excursion from `x` to `y` is the walk with jump rates equal to the
//! conductances, h-transformed by `h(w) = P_w[hit y before x, the boundary
//! and killing]`. Holding times are exponential with rate equal to the
//! total conductance at the vertex; they are the local times, normalised
//! so that the killed walk from `x` spends `G(x, z)` at `z` on average.
//!
//! In occupation units (those of the squared field) one unit of local
//! time counts twice, and return excursions from `x` leave through edge
//! `(x, w)` at rate `a^2 c_xw h(w) / 2`.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::graph::CableGraph;
use crate::green::harmonic_extension;
use crate::loops::{conditioned_poisson, poisson, Parity};

/// Occupation per unit of local time.
pub const OCCUPATION_SCALE: f64 = 2.0;
/// Return-excursion intensity per unit of `a^2` and of `c_xw h(w)`.
pub const RETURN_INTENSITY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionPath {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    /// Local time spent at each entry of `vertices`; zero at the endpoints.
    pub increments: Vec<f64>,
    pub killed: bool,
}

impl ExcursionPath {
    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().expect("non-empty path")
    }

    pub fn steps(&self) -> usize {
        self.edges.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionEnsemble {
    pub paths: Vec<ExcursionPath>,
    pub local_time: Vec<f64>,
    pub crossings: Vec<u64>,
}

impl ExcursionEnsemble {
    pub fn empty(g: &CableGraph) -> Self {
        ExcursionEnsemble {
            paths: Vec::new(),
            local_time: vec![0.0; g.n_vertices()],
            crossings: vec![0; g.edges().len()],
        }
    }

    pub fn push(&mut self, p: ExcursionPath) {
        for (&v, &dt) in p.vertices.iter().zip(&p.increments) {
            self.local_time[v] += dt;
        }
        for &e in &p.edges {
            self.crossings[e] += 1;
        }
        self.paths.push(p);
    }

    pub fn occupation(&self, v: usize) -> f64 {
        OCCUPATION_SCALE * self.local_time[v]
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// h-transformed walk from `source` to `target`.
#[derive(Debug, Clone)]
pub struct HWalk {
    pub source: usize,
    pub target: usize,
    h: Vec<f64>,
    mass: f64,
    rate: Vec<f64>,
    moves: Vec<Vec<(usize, usize, f64)>>,
}

impl HWalk {
    /// `avoid` lists vertices that end nothing but kill the walk, on top of
    /// the boundary; the source is avoided unless it is also the target.
    pub fn new(g: &CableGraph, source: usize, target: usize, avoid: &[usize]) -> Result<Self> {
        if avoid.contains(&source) || avoid.contains(&target) {
            return Err(Error::SameVertex(g.label(source).to_string()));
        }
        let mut pins = vec![(target, 1.0)];
        if source != target {
            pins.push((source, 0.0));
        }
        pins.extend(avoid.iter().map(|&v| (v, 0.0)));
        let h = harmonic_extension(g, &pins)?;
        let mut moves = vec![Vec::new(); g.n_vertices()];
        for u in 0..g.n_vertices() {
            let walkable = u == source || (h[u] > 0.0 && u != target && !g.is_boundary(u) && !avoid.contains(&u));
            if !walkable {
                continue;
            }
            let mut cum = 0.0;
            for &(e, w) in g.incident(u) {
                let wt = g.edge(e).conductance() * h[w];
                if wt > 0.0 && (u != source || w != source) {
                    cum += wt;
                    moves[u].push((e, w, cum));
                }
            }
        }
        let mass = moves[source].last().map_or(0.0, |m| m.2);
        let rate = (0..g.n_vertices()).map(|v| g.total_conductance(v)).collect();
        Ok(HWalk { source, target, h, mass, rate, moves })
    }

    /// `sum_w c_{source,w} h(w)`: for distinct endpoints this is the
    /// effective conductance between them.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    fn step<R: Rng + ?Sized>(&self, u: usize, rng: &mut R) -> (usize, usize) {
        let table = &self.moves[u];
        let total = table.last().expect("walk reached a dead end").2;
        let r = rng.gen::<f64>() * total;
        let i = table.partition_point(|m| m.2 <= r).min(table.len() - 1);
        (table[i].0, table[i].1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ExcursionPath> {
        if self.mass <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let mut vertices = vec![self.source];
        let mut edges = Vec::new();
        let mut increments = vec![0.0];
        let mut u = self.source;
        loop {
            let (e, w) = self.step(u, rng);
            edges.push(e);
            vertices.push(w);
            if w == self.target {
                increments.push(0.0);
                break;
            }
            increments.push(Exp::new(self.rate[w]).expect("positive rate").sample(rng));
            u = w;
        }
        Ok(ExcursionPath { vertices, edges, increments, killed: false })
    }
}

/// Excursions from `x` to `y` counted by a parity-conditioned Poisson law
/// of mean `a b c_eff(x, y)`.
pub fn sample_xy_ensemble<R: Rng + ?Sized>(
    g: &CableGraph,
    walk: &HWalk,
    a: f64,
    b: f64,
    parity: Parity,
    rng: &mut R,
) -> Result<ExcursionEnsemble> {
    let mean = a * b * walk.mass();
    if mean == 0.0 && parity == Parity::Odd {
        return Err(Error::ZeroMass);
    }
    let n = conditioned_poisson(mean, parity, rng)?;
    let mut ens = ExcursionEnsemble::empty(g);
    for _ in 0..n {
        ens.push(walk.sample(rng)?);
    }
    Ok(ens)
}

/// Return excursions from `x` (avoiding whatever `walk` avoids) carrying
/// occupation `a^2` at `x`.
pub fn sample_xx_ensemble<R: Rng + ?Sized>(
    g: &CableGraph,
    walk: &HWalk,
    a: f64,
    rng: &mut R,
) -> Result<ExcursionEnsemble> {
    let mut ens = ExcursionEnsemble::empty(g);
    if walk.mass() == 0.0 {
        return Ok(ens);
    }
    let n = poisson(RETURN_INTENSITY * a * a * walk.mass(), rng);
    for _ in 0..n {
        ens.push(walk.sample(rng)?);
    }
    Ok(ens)
}

/// One excursion from `x` to the wired boundary vertex `boundary`.
pub fn boundary_excursion<R: Rng + ?Sized>(
    g: &CableGraph,
    x: usize,
    boundary: usize,
    rng: &mut R,
) -> Result<ExcursionPath> {
    if !g.is_boundary(boundary) {
        return Err(Error::InvalidConfig(format!("{} is not a boundary vertex", g.label(boundary))));
    }
    HWalk::new(g, x, boundary, &[])?.sample(rng)
}

/// Plain walk from `x` until it reaches the boundary or is killed; local
/// time is recorded at every visit, `x` included.
pub fn sample_killed_walk<R: Rng + ?Sized>(g: &CableGraph, x: usize, rng: &mut R) -> ExcursionPath {
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let mut increments = Vec::new();
    let mut u = x;
    loop {
        vertices.push(u);
        if g.is_boundary(u) {
            increments.push(0.0);
            return ExcursionPath { vertices, edges, increments, killed: false };
        }
        let c = g.total_conductance(u);
        increments.push(Exp::new(c).expect("positive rate").sample(rng));
        let mut r = rng.gen::<f64>() * c;
        if r < g.killing(u) {
            return ExcursionPath { vertices, edges, increments, killed: true };
        }
        r -= g.killing(u);
        let inc = g.incident(u);
        let mut next = inc[inc.len() - 1];
        for &(e, w) in inc {
            let ce = g.edge(e).conductance();
            if r < ce {
                next = (e, w);
                break;
            }
            r -= ce;
        }
        edges.push(next.0);
        u = next.1;
    }
}

/// Probability that an edge carrying no crossing is still covered, given
/// the occupations at its ends.
pub fn edge_open_given_no_crossing(lu: f64, lv: f64, resistance: f64) -> Result<f64> {
    if lu < 0.0 || lv < 0.0 || !(resistance > 0.0) {
        return Err(Error::InvalidConfig(format!("occupations {lu}, {lv}, resistance {resistance}")));
    }
    Ok(-(-(lu * lv).sqrt() / resistance).exp_m1())
}

pub fn write_paths_csv<W: Write>(g: &CableGraph, paths: &[ExcursionPath], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path", "step", "vertex", "edge", "local_time"])?;
    for (i, p) in paths.iter().enumerate() {
        for (s, (&v, &dt)) in p.vertices.iter().zip(&p.increments).enumerate() {
            let edge = if s == 0 { String::new() } else { p.edges[s - 1].to_string() };
            w.write_record([i.to_string(), s.to_string(), g.label(v).to_string(), edge, dt.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{grid, path, refined, BoundaryKind, CableGraph};
    use crate::green::{effective_conductance, green};
    use crate::seed::{replicate, stream};
    use crate::stats::mean_se;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn xy_paths_respect_endpoints() {
        let g = refined(&grid(3, 3, BoundaryKind::Wired, 0.0).unwrap(), 2).unwrap();
        let (x, y) = (g.vertex("0,1").unwrap(), g.vertex("2,1").unwrap());
        let w = HWalk::new(&g, x, y, &[]).unwrap();
        let mut rng = stream(1, 0, 0);
        for _ in 0..500 {
            let p = w.sample(&mut rng).unwrap();
            assert_eq!(p.start(), x);
            assert_eq!(p.end(), y);
            let inner = &p.vertices[1..p.vertices.len() - 1];
            assert!(inner.iter().all(|&v| v != x && v != y && !g.is_boundary(v)));
            assert_eq!(p.increments[0], 0.0);
            assert_eq!(*p.increments.last().unwrap(), 0.0);
            for (k, &e) in p.edges.iter().enumerate() {
                let ed = g.edge(e);
                let (a, b) = (p.vertices[k], p.vertices[k + 1]);
                assert!((ed.u, ed.v) == (a, b) || (ed.u, ed.v) == (b, a));
            }
        }
    }

    #[test]
    fn xy_mass_is_effective_conductance() {
        let g = grid(3, 3, BoundaryKind::Wired, 0.0).unwrap();
        let (x, y) = (g.vertex("0,0").unwrap(), g.vertex("2,1").unwrap());
        let w = HWalk::new(&g, x, y, &[]).unwrap();
        assert!((w.mass() - effective_conductance(&g, x, y).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn parallel_routes_split_evenly() {
        let g = CableGraph::new(
            (0..4).map(|i| i.to_string()).collect(),
            vec![(0, 1, 1.0), (1, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0)],
            vec![true, false, false, true],
            vec![0.0; 4],
        )
        .unwrap();
        let w = HWalk::new(&g, 1, 2, &[]).unwrap();
        let n = 20_000;
        let first = replicate(n, 2, "par", |_, rng| (w.sample(rng).unwrap().edges[0] == 1) as u8 as f64);
        let (f, _) = mean_se(&first);
        assert!((f - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn killed_walk_local_time_is_green() {
        let g = grid(3, 2, BoundaryKind::Free, 0.4).unwrap();
        let gr = green(&g).unwrap();
        let (x, z) = (g.vertex("0,0").unwrap(), g.vertex("2,1").unwrap());
        let lt = replicate(40_000, 3, "killed", |_, rng| {
            let p = sample_killed_walk(&g, x, rng);
            assert!(p.killed);
            p.vertices.iter().zip(&p.increments).filter(|(&v, _)| v == z).map(|(_, &d)| d).sum::<f64>()
        });
        let (m, se) = mean_se(&lt);
        assert!((m - gr.get(x, z)).abs() < 3.0 * se, "{m} vs {}", gr.get(x, z));
    }

    /// Mean number of steps of the conditioned walk from the fundamental
    /// matrix of its transient part, built independently of the sampler.
    #[test]
    fn conditioned_steps_match_fundamental_matrix() {
        let g = refined(&path(4).unwrap(), 4).unwrap();
        let (x, y) = (1, 2);
        let w = HWalk::new(&g, x, y, &[]).unwrap();
        let h = harmonic_extension(&g, &[(x, 0.0), (y, 1.0)]).unwrap();
        let states: Vec<usize> = (0..g.n_vertices()).filter(|&v| v != y && !g.is_boundary(v) && (v == x || h[v] > 0.0)).collect();
        let idx = |v: usize| states.iter().position(|&s| s == v);
        let n = states.len();
        let mut q = DMatrix::<f64>::zeros(n, n);
        for (i, &u) in states.iter().enumerate() {
            let tot: f64 = g.incident(u).iter().map(|&(e, v)| g.edge(e).conductance() * h[v] * (v != x) as u8 as f64).sum();
            for &(e, v) in g.incident(u) {
                if v == x {
                    continue;
                }
                if let Some(j) = idx(v) {
                    q[(i, j)] += g.edge(e).conductance() * h[v] / tot;
                }
            }
        }
        let fundamental = (DMatrix::identity(n, n) - q).try_inverse().unwrap();
        let steps = fundamental * DVector::from_element(n, 1.0);
        let want = steps[idx(x).unwrap()];
        let got = replicate(20_000, 4, "steps", |_, rng| w.sample(rng).unwrap().steps() as f64);
        let (m, se) = mean_se(&got);
        assert!((m - want).abs() < 3.0 * se, "{m} vs {want}");
    }

    /// Exit edge of the boundary excursion against an absorbing-chain solve.
    #[test]
    fn boundary_exit_law_matches_linear_solve() {
        let g = grid(3, 3, BoundaryKind::Wired, 0.0).unwrap();
        let x = g.vertex("1,1").unwrap();
        let bd = g.vertex("bd").unwrap();
        let exits: Vec<usize> = g.incident(bd).iter().map(|&(e, _)| e).collect();
        // probability of entering bd through edge e starting from u, killed on return to x
        let interior: Vec<usize> = g.interior().into_iter().filter(|&v| v != x).collect();
        let n = interior.len();
        let pos = |v: usize| interior.iter().position(|&s| s == v);
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DMatrix::<f64>::zeros(n, exits.len());
        for (i, &u) in interior.iter().enumerate() {
            a[(i, i)] = g.total_conductance(u);
            for &(e, v) in g.incident(u) {
                if let Some(j) = pos(v) {
                    a[(i, j)] -= g.edge(e).conductance();
                } else if v == bd {
                    let k = exits.iter().position(|&f| f == e).unwrap();
                    rhs[(i, k)] += g.edge(e).conductance();
                }
            }
        }
        let sol = a.try_inverse().unwrap() * rhs;
        let mut law = vec![0.0; exits.len()];
        for &(e, v) in g.incident(x) {
            if let Some(j) = pos(v) {
                for k in 0..exits.len() {
                    law[k] += g.edge(e).conductance() * sol[(j, k)];
                }
            }
        }
        let s: f64 = law.iter().sum();
        law.iter_mut().for_each(|p| *p /= s);
        let n_draw = 40_000;
        let draws = replicate(n_draw, 5, "exit", |_, rng| *boundary_excursion(&g, x, bd, rng).unwrap().edges.last().unwrap());
        let mut counts = vec![0.0; exits.len()];
        for e in draws {
            counts[exits.iter().position(|&f| f == e).unwrap()] += 1.0;
        }
        let expected: Vec<f64> = law.iter().map(|p| p * n_draw as f64).collect();
        let chi = crate::stats::chi_square(&counts, &expected, 0).unwrap();
        assert!(chi.p_value > 0.001, "{chi:?}");
    }

    /// Mean occupation of the return excursions equals `a^2 phi(z)^2`.
    #[test]
    fn return_ensemble_calibration() {
        let g = refined(&grid(3, 3, BoundaryKind::Wired, 0.0).unwrap(), 2).unwrap();
        let (x, y) = (g.vertex("0,1").unwrap(), g.vertex("2,1").unwrap());
        let z = g.vertex("1,1").unwrap();
        let a = 1.3;
        let w = HWalk::new(&g, x, x, &[y]).unwrap();
        let phi = harmonic_extension(&g, &[(x, 1.0), (y, 0.0)]).unwrap();
        let occ = replicate(40_000, 6, "calib", |_, rng| sample_xx_ensemble(&g, &w, a, rng).unwrap().occupation(z));
        let (m, se) = mean_se(&occ);
        let want = a * a * phi[z] * phi[z];
        assert!((m - want).abs() < 3.0 * se, "{m} vs {want}");
    }

    #[test]
    fn completion_rule_identity() {
        for m in [0.1f64, 0.5, 1.0, 2.5] {
            let q0 = edge_open_given_no_crossing(m, m, 1.0).unwrap();
            let lhs = (-m).exp() * q0 + (1.0 - (-m).exp());
            assert!((lhs - (1.0 - (-2.0 * m).exp())).abs() < 1e-12);
        }
        assert!(edge_open_given_no_crossing(-1.0, 1.0, 1.0).is_err());
    }

    /// Covering probability of an edge without crossings from its parts:
    /// the two absorbed flows from the ends (absorption times drawn from
    /// their exact law) and the squared loop bridge filling any gap.
    #[test]
    fn completion_rule_against_flow_oracle() {
        let (lu, lv) = (1.0f64, 1.0f64);
        let tau = |x: f64, u: f64| x / (x - 2.0 * u.ln());
        let draws = replicate(200_000, 7, "flows", |_, rng| {
            let s = tau(lu, rng.gen::<f64>().max(f64::MIN_POSITIVE));
            let t = 1.0 - tau(lv, rng.gen::<f64>().max(f64::MIN_POSITIVE));
            if s >= t {
                return 1.0;
            }
            let nrm = rand_distr::StandardNormal;
            let xs: f64 = (s * (1.0 - s)).sqrt() * rng.sample::<f64, _>(nrm);
            let xt: f64 = xs * (1.0 - t) / (1.0 - s) + ((t - s) * (1.0 - t) / (1.0 - s)).sqrt() * rng.sample::<f64, _>(nrm);
            crate::gff::lupu_open_probability(xs, xt, t - s)
        });
        let (m, se) = mean_se(&draws);
        let want = edge_open_given_no_crossing(lu, lv, 1.0).unwrap();
        assert!((m - want).abs() < 3.0 * se, "{m} vs {want}");
    }

    #[test]
    fn zero_mass_is_an_error() {
        let g = CableGraph::new(
            (0..3).map(|i| i.to_string()).collect(),
            vec![(0, 1, 1.0), (1, 2, 1.0)],
            vec![false, true, false],
            vec![0.0; 3],
        )
        .unwrap();
        let w = HWalk::new(&g, 0, 2, &[]).unwrap();
        assert_eq!(w.mass(), 0.0);
        let mut rng = stream(0, 0, 0);
        assert!(matches!(sample_xy_ensemble(&g, &w, 1.0, 1.0, Parity::Odd, &mut rng), Err(Error::ZeroMass)));
    }

    #[test]
    fn path_csv_has_header_and_rows() {
        let g = path(4).unwrap();
        let w = HWalk::new(&g, 1, 2, &[]).unwrap();
        let p = w.sample(&mut stream(0, 0, 0)).unwrap();
        let mut buf = Vec::new();
        write_paths_csv(&g, std::slice::from_ref(&p), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("path,step,vertex,edge,local_time"));
        assert_eq!(text.lines().count(), 1 + p.vertices.len());
    }
}
