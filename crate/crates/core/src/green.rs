//! Green operator, harmonic extension and effective conductance.
//!
//! Dense linear algebra throughout; fixtures stay below a couple of
//! thousand interior vertices.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::graph::CableGraph;

/// `G = L^{-1}` on the interior vertices, with a lower factor of `G` for sampling.
#[derive(Debug, Clone)]
pub struct GreenOperator {
    interior: Vec<usize>,
    position: Vec<Option<usize>>,
    matrix: DMatrix<f64>,
    factor: DMatrix<f64>,
}

/// Weighted Laplacian restricted to `rows`: conductances to vertices
/// outside `rows` and killing sit on the diagonal.
pub fn laplacian(g: &CableGraph, rows: &[usize]) -> DMatrix<f64> {
    let mut pos = vec![None; g.n_vertices()];
    for (i, &v) in rows.iter().enumerate() {
        pos[v] = Some(i);
    }
    let n = rows.len();
    let mut l = DMatrix::zeros(n, n);
    for (i, &v) in rows.iter().enumerate() {
        l[(i, i)] += g.killing(v);
    }
    for e in g.edges() {
        let c = e.conductance();
        match (pos[e.u], pos[e.v]) {
            (Some(i), Some(j)) => {
                l[(i, i)] += c;
                l[(j, j)] += c;
                l[(i, j)] -= c;
                l[(j, i)] -= c;
            }
            (Some(i), None) => l[(i, i)] += c,
            (None, Some(j)) => l[(j, j)] += c,
            (None, None) => {}
        }
    }
    l
}

fn cholesky(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or(Error::SingularLaplacian)
}

pub fn green(g: &CableGraph) -> Result<GreenOperator> {
    let interior = g.interior();
    let mut position = vec![None; g.n_vertices()];
    for (i, &v) in interior.iter().enumerate() {
        position[v] = Some(i);
    }
    let matrix = if interior.is_empty() {
        DMatrix::zeros(0, 0)
    } else {
        cholesky(laplacian(g, &interior))?.inverse()
    };
    let factor = if interior.is_empty() {
        DMatrix::zeros(0, 0)
    } else {
        let sym = (&matrix + matrix.transpose()) * 0.5;
        cholesky(sym)?.l()
    };
    Ok(GreenOperator {
        interior,
        position,
        matrix,
        factor,
    })
}

impl GreenOperator {
    /// `G(u, v)`; zero if either vertex is on the boundary.
    pub fn get(&self, u: usize, v: usize) -> f64 {
        match (self.position[u], self.position[v]) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => 0.0,
        }
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower-triangular `F` with `F F^T = G`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn n_vertices(&self) -> usize {
        self.position.len()
    }
}

/// Solves the Dirichlet problem: harmonic off `pins` and the boundary,
/// equal to the pinned values on `pins`, zero on unpinned boundary.
/// Pins may be boundary vertices.
pub fn harmonic_extension(g: &CableGraph, pins: &[(usize, f64)]) -> Result<Vec<f64>> {
    let mut value = vec![0.0; g.n_vertices()];
    let mut pinned = vec![false; g.n_vertices()];
    for &(v, x) in pins {
        value[v] = x;
        pinned[v] = true;
    }
    let free: Vec<usize> = (0..g.n_vertices())
        .filter(|&v| !pinned[v] && !g.is_boundary(v))
        .collect();
    if free.is_empty() {
        return Ok(value);
    }
    let reduced = g.with_extra_boundary(&pins.iter().map(|p| p.0).collect::<Vec<_>>());
    let l = laplacian(&reduced, &free);
    let mut rhs = DVector::zeros(free.len());
    for (i, &v) in free.iter().enumerate() {
        for &(e, w) in g.incident(v) {
            if pinned[w] {
                rhs[i] += g.edge(e).conductance() * value[w];
            }
        }
    }
    let sol = cholesky(l)?.solve(&rhs);
    for (i, &v) in free.iter().enumerate() {
        value[v] = sol[i];
    }
    Ok(value)
}

/// Schur complement of the Laplacian onto `marks`; every other vertex
/// not on the boundary is eliminated. Marks may be boundary vertices.
pub fn trace_operator(g: &CableGraph, marks: &[usize]) -> Result<DMatrix<f64>> {
    let mut is_mark = vec![false; g.n_vertices()];
    for &m in marks {
        is_mark[m] = true;
    }
    let rest: Vec<usize> = (0..g.n_vertices())
        .filter(|&v| !is_mark[v] && !g.is_boundary(v))
        .collect();
    let mut rows = marks.to_vec();
    rows.extend(&rest);
    let full = laplacian(g, &rows);
    let k = marks.len();
    let n = rows.len();
    let aa = full.view((0, 0), (k, k)).into_owned();
    if n == k {
        return Ok(aa);
    }
    let ab = full.view((0, k), (k, n - k)).into_owned();
    let bb = full.view((k, k), (n - k, n - k)).into_owned();
    let sol = cholesky(bb)?.solve(&ab.transpose());
    Ok(aa - ab * sol)
}

/// Off-diagonal magnitude of the Schur complement onto `{x, y}`.
/// Returns `0` when every route between them passes through the boundary.
pub fn effective_conductance(g: &CableGraph, x: usize, y: usize) -> Result<f64> {
    if x == y {
        return Err(Error::SameVertex(g.label(x).to_string()));
    }
    let s = trace_operator(g, &[x, y])?;
    Ok((-s[(0, 1)]).max(0.0))
}

/// `m = a b c_eff(x, y)`.
pub fn two_point_mass(g: &CableGraph, x: usize, y: usize, a: f64, b: f64) -> Result<f64> {
    Ok(a * b * effective_conductance(g, x, y)?)
}

/// The same mass read off the covariance: `a b G(x,y) / (G(x,x) G(y,y) - G(x,y)^2)`.
pub fn two_point_mass_from_green(gr: &GreenOperator, x: usize, y: usize, a: f64, b: f64) -> f64 {
    let (gxx, gyy, gxy) = (gr.get(x, x), gr.get(y, y), gr.get(x, y));
    a * b * gxy / (gxx * gyy - gxy * gxy)
}
