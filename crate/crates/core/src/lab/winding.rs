//! Winding parity of sign clusters around marked faces.

use crate::error::Result;
use crate::gff::{open_clusters, open_edges, sample_field};
use crate::graph::ray_edges;
use crate::green::green;
use crate::lab::config::ExperimentConfig;
use crate::lab::pnew::endpoint_list;
use crate::lab::report::{FunctionalResult, TestReport};
use crate::loops::{cycle_basis, sample_even_subgraph, winding_parity};
use crate::seed::replicate;
use crate::stats::chi_square;

/// Per replica: `(cluster, face, parity)` for every cluster that winds
/// around some marked face, scored at the first such face, and the number
/// of (cluster, face) pairs without winding but with odd parity.
#[derive(Debug, Clone)]
pub struct WindingDraw {
    pub winding: Vec<(usize, usize, bool)>,
    pub violations: usize,
}

pub fn run_winding_test(cfg: &ExperimentConfig) -> Result<TestReport> {
    cfg.validate()?;
    let g = cfg.base_graph()?;
    let gr = green(&g)?;
    let edges = endpoint_list(&g);
    let rays: Vec<Vec<bool>> = cfg.faces.iter().map(|&(fx, fy)| ray_edges(&g, fx, fy)).collect();
    let n = cfg.replicas;
    let mut rep = TestReport::new(cfg.kind.name(), cfg.seed, n);
    rep.note("faces", format!("{:?}", cfg.faces));

    let draws = replicate(n, cfg.seed, "winding", |_, rng| {
        let values = sample_field(&gr, rng);
        let open = open_edges(&g, &values, rng);
        let basis = cycle_basis(g.n_vertices(), &edges, &open);
        let parity = sample_even_subgraph(&basis, rng);
        let cl = open_clusters(&g, &open);
        let mut cluster_edges = vec![Vec::new(); cl.count];
        for (i, e) in g.edges().iter().enumerate() {
            if open[i] {
                cluster_edges[cl.cluster[e.u]].push(i);
            }
        }
        let mut out = WindingDraw { winding: Vec::new(), violations: 0 };
        let mut scored = vec![false; cl.count];
        for (f, ray) in rays.iter().enumerate() {
            let mut winds = vec![false; cl.count];
            for c in &basis.cycles {
                if c.iter().filter(|&&e| ray[e]).count() % 2 == 1 {
                    winds[cl.cluster[edges[c[0]].0]] = true;
                }
            }
            for (c, es) in cluster_edges.iter().enumerate() {
                if es.is_empty() {
                    continue;
                }
                let bit = winding_parity(&parity, es, ray);
                if !winds[c] {
                    out.violations += bit as usize;
                } else if !scored[c] {
                    // one face per cluster keeps the entries independent
                    scored[c] = true;
                    out.winding.push((c, f, bit));
                }
            }
        }
        out
    });

    let bits: Vec<bool> = draws.iter().flat_map(|d| d.winding.iter().map(|w| w.2)).collect();
    let total = bits.len();
    let ones = bits.iter().filter(|&&b| b).count();
    rep.note("winding clusters", total);
    if total == 0 {
        rep.push(FunctionalResult::at_most("winding clusters observed", 0, 0.0, -1.0, "none observed; count"));
    } else {
        let se = 0.5 / (total as f64).sqrt();
        rep.push(FunctionalResult::within_se("P[winding parity = 1]", total, ones as f64 / total as f64, se, 0.5, 3.0));
    }
    let viol: usize = draws.iter().map(|d| d.violations).sum();
    rep.push(FunctionalResult::at_most("odd parity on non-winding clusters", n, viol as f64, 0.0, "count"));

    let mut table = [0.0; 4];
    let mut pairs = 0;
    for d in &draws {
        if let Some(first) = d.winding.first() {
            if let Some(second) = d.winding.iter().find(|w| w.0 != first.0) {
                table[(first.2 as usize) * 2 + second.2 as usize] += 1.0;
                pairs += 1;
            }
        }
    }
    rep.note("pairs of distinct winding clusters", pairs);
    match chi_square(&table, &[pairs as f64 / 4.0; 4], 0) {
        Ok(r) => rep.push(FunctionalResult::chi("joint parity of two winding clusters", pairs, r, cfg.alpha)),
        Err(_) => rep.push(FunctionalResult::at_most("joint parity of two winding clusters", pairs, pairs as f64, -1.0, "too few pairs; count")),
    }
    Ok(rep)
}
