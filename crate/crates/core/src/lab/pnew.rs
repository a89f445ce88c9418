//! Crossing parities given the occupation field: uniform over the even
//! subgraphs of the covered edges, and independent of the occupations.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::Result;
use crate::excursions::edge_open_given_no_crossing;
use crate::gff::{open_edges, sample_field};
use crate::graph::{grid, BoundaryKind, CableGraph};
use crate::green::green;
use crate::lab::config::ExperimentConfig;
use crate::lab::report::{FunctionalResult, TestReport};
use crate::loops::{cycle_basis, is_even_subgraph, poisson, sample_even_subgraph};
use crate::seed::replicate;
use crate::stats::{chi_square, chi_square_two_sample, correlation};

/// Occupations at the vertices, covered edges and crossing parities.
#[derive(Debug, Clone)]
pub struct ParityDraw {
    pub occupation: Vec<f64>,
    pub open: Vec<bool>,
    pub parity: Vec<bool>,
    pub attempts: u64,
}

/// Given the field at the vertices, each edge independently gets a
/// Poisson crossing count of mean `|g_u g_v| / R` and, when the count is
/// zero, is covered with the no-crossing probability; the whole edge
/// configuration is then conditioned on every vertex meeting an even number
/// of odd edges.
pub fn sample_parity_config<R: Rng + ?Sized>(g: &CableGraph, values: &[f64], rng: &mut R) -> ParityDraw {
    let edges = endpoint_list(g);
    let occupation: Vec<f64> = values.iter().map(|v| v * v).collect();
    let mut attempts = 0;
    loop {
        attempts += 1;
        let mut open = vec![false; edges.len()];
        let mut parity = vec![false; edges.len()];
        for (i, e) in g.edges().iter().enumerate() {
            let m = (values[e.u] * values[e.v]).abs() / e.resistance;
            if m == 0.0 {
                continue;
            }
            let n = poisson(m, rng);
            parity[i] = n % 2 == 1;
            open[i] = n > 0 || {
                let q0 = edge_open_given_no_crossing(occupation[e.u], occupation[e.v], e.resistance)
                    .expect("non-negative occupations");
                rng.gen::<f64>() < q0
            };
        }
        if is_even_subgraph(g.n_vertices(), &edges, &parity) {
            return ParityDraw { occupation, open, parity, attempts };
        }
    }
}

pub fn endpoint_list(g: &CableGraph) -> Vec<(usize, usize)> {
    g.edges().iter().map(|e| (e.u, e.v)).collect()
}

fn mask(bits: &[bool]) -> u128 {
    bits.iter().enumerate().filter(|(_, &b)| b).fold(0u128, |m, (i, _)| m | 1 << i)
}

/// Every even subgraph of the edges in `include`, as masks.
pub fn enumerate_even(n_vertices: usize, edges: &[(usize, usize)], include: &[bool]) -> Vec<u128> {
    let basis = cycle_basis(n_vertices, edges, include);
    let cyc: Vec<u128> = basis
        .cycles
        .iter()
        .map(|c| c.iter().fold(0u128, |m, &e| m | 1 << e))
        .collect();
    (0u64..1 << cyc.len())
        .map(|sel| cyc.iter().enumerate().filter(|(i, _)| sel >> i & 1 == 1).fold(0u128, |m, (_, c)| m ^ c))
        .collect()
}

/// Uniform even-subgraph sampler against brute-force enumeration of the
/// even subsets.
pub fn even_sampler_uniformity(
    name: &str,
    n_vertices: usize,
    edges: &[(usize, usize)],
    draws: usize,
    seed: u64,
    threshold: f64,
) -> Result<FunctionalResult> {
    let all: Vec<u128> = (0u64..1 << edges.len())
        .map(|m| m as u128)
        .filter(|&m| {
            let chosen: Vec<bool> = (0..edges.len()).map(|i| m >> i & 1 == 1).collect();
            is_even_subgraph(n_vertices, edges, &chosen)
        })
        .collect();
    let basis = cycle_basis(n_vertices, edges, &vec![true; edges.len()]);
    let got = replicate(draws, seed, name, |_, rng| mask(&sample_even_subgraph(&basis, rng)));
    let mut counts = vec![0.0; all.len()];
    for m in got {
        match all.iter().position(|&a| a == m) {
            Some(i) => counts[i] += 1.0,
            None => return Ok(FunctionalResult::at_most(format!("even sampler on {name}"), draws, 1.0, 0.0, "non-even draws")),
        }
    }
    let expected = vec![draws as f64 / all.len() as f64; all.len()];
    Ok(FunctionalResult::chi(format!("even sampler uniform on {name} ({} edges)", edges.len()), draws, chi_square(&counts, &expected, 0)?, threshold))
}

fn k4() -> Vec<(usize, usize)> {
    vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
}

fn grid_interior_edges() -> Result<(usize, Vec<(usize, usize)>)> {
    let g = grid(3, 3, BoundaryKind::Wired, 0.0)?;
    let edges = g
        .edges()
        .iter()
        .filter(|e| !g.is_boundary(e.u) && !g.is_boundary(e.v))
        .map(|e| (e.u, e.v))
        .collect();
    Ok((9, edges))
}

pub fn run_pnew_test(cfg: &ExperimentConfig) -> Result<TestReport> {
    cfg.validate()?;
    let g = cfg.base_graph()?;
    let gr = green(&g)?;
    let edges = endpoint_list(&g);
    let n = cfg.replicas;
    let mut rep = TestReport::new(cfg.kind.name(), cfg.seed, n);
    rep.note("graph", &cfg.graph);

    let draws = replicate(n, cfg.seed, "pnew", |_, rng| {
        let values = sample_field(&gr, rng);
        sample_parity_config(&g, &values, rng)
    });
    let attempts: u64 = draws.iter().map(|d| d.attempts).sum();
    rep.note("parity acceptance", format!("{:.4}", n as f64 / attempts as f64));

    let mut strata: BTreeMap<u128, Vec<usize>> = BTreeMap::new();
    for (i, d) in draws.iter().enumerate() {
        strata.entry(mask(&d.open)).or_default().push(i);
    }
    let mut tree_violations = 0;
    let mut tested = Vec::new();
    for (&open_mask, idx) in &strata {
        let include: Vec<bool> = (0..edges.len()).map(|i| open_mask >> i & 1 == 1).collect();
        let evens = enumerate_even(g.n_vertices(), &edges, &include);
        if evens.len() == 1 {
            tree_violations += idx.iter().filter(|&&i| draws[i].parity.iter().any(|&p| p)).count();
            continue;
        }
        if idx.len() as f64 / (evens.len() as f64) < 5.0 {
            continue;
        }
        let mut counts = vec![0.0; evens.len()];
        for &i in idx {
            let m = mask(&draws[i].parity);
            let k = evens.iter().position(|&e| e == m).expect("parity is an even subgraph of the open set");
            counts[k] += 1.0;
        }
        tested.push((open_mask, idx.len(), counts));
    }
    rep.push(FunctionalResult::at_most("odd edges on forest strata", n, tree_violations as f64, 0.0, "count"));
    let threshold = cfg.alpha / tested.len().max(1) as f64;
    for (open_mask, size, counts) in &tested {
        let expected = vec![*size as f64 / counts.len() as f64; counts.len()];
        let name = format!("uniform parity on stratum {}", stratum_name(&g, *open_mask));
        rep.push(FunctionalResult::chi(name, *size, chi_square(counts, &expected, 0)?, threshold));
    }

    // independence from the occupations inside the largest cyclic stratum
    if let Some((open_mask, size, _)) = tested.iter().max_by_key(|t| t.1) {
        let idx = &strata[open_mask];
        let include: Vec<bool> = (0..edges.len()).map(|i| open_mask >> i & 1 == 1).collect();
        let e0 = cycle_basis(g.n_vertices(), &edges, &include).cycles[0][0];
        let p: Vec<f64> = idx.iter().map(|&i| draws[i].parity[e0] as u8 as f64).collect();
        let se = 1.0 / (*size as f64).sqrt();
        for v in g.interior() {
            let occ: Vec<f64> = idx.iter().map(|&i| draws[i].occupation[v]).collect();
            let rho = correlation(&occ, &p);
            rep.push(FunctionalResult::within_se(
                format!("corr(occupation at {}, parity of edge {})", g.label(v), e0),
                *size,
                rho,
                se,
                0.0,
                3.0,
            ));
        }
    }

    // covered-edge law against the sign clusters of the field
    let lupu = replicate(n, cfg.seed, "pnew-lupu", |_, rng| {
        let values = sample_field(&gr, rng);
        mask(&open_edges(&g, &values, rng))
    });
    let mut cells: BTreeMap<u128, (f64, f64)> = BTreeMap::new();
    for d in &draws {
        cells.entry(mask(&d.open)).or_default().0 += 1.0;
    }
    for m in lupu {
        cells.entry(m).or_default().1 += 1.0;
    }
    let (a, b): (Vec<f64>, Vec<f64>) = cells.values().copied().unzip();
    rep.push(FunctionalResult::chi("covered edges vs sign-cluster edges", n, chi_square_two_sample(&a, &b)?, cfg.alpha));

    let (gn, gedges) = grid_interior_edges()?;
    let fixture_interior: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|e| !g.is_boundary(e.u) && !g.is_boundary(e.v))
        .map(|e| (e.u, e.v))
        .collect();
    for (name, nv, es) in [
        (cfg.graph.as_str(), g.n_vertices(), fixture_interior),
        ("K4", 4, k4()),
        ("3x3 grid", gn, gedges),
    ] {
        if cycle_basis(nv, &es, &vec![true; es.len()]).dimension() == 0 {
            continue;
        }
        rep.push(even_sampler_uniformity(name, nv, &es, n, cfg.seed, cfg.alpha / 3.0)?);
    }
    Ok(rep)
}

fn stratum_name(g: &CableGraph, open_mask: u128) -> String {
    let parts: Vec<String> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, _)| open_mask >> i & 1 == 1)
        .map(|(_, e)| format!("{}-{}", g.label(e.u), g.label(e.v)))
        .collect();
    format!("{{{}}}", parts.join(" "))
}
