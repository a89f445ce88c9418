//! Weighted graphs with Dirichlet boundary and killing, plus the fixture
//! generators used by the experiments.
//!
//! Every edge stands for a segment of length equal to its resistance. The
//! interior vertices carry the field; boundary vertices are pinned to zero
//! unless a caller pins them explicitly.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub resistance: f64,
}

impl Edge {
    pub fn conductance(&self) -> f64 {
        1.0 / self.resistance
    }

    pub fn other(&self, w: usize) -> usize {
        if w == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone)]
pub struct CableGraph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    boundary: Vec<bool>,
    killing: Vec<f64>,
    adjacency: Vec<Vec<(usize, usize)>>,
    coords: Vec<Option<Vec<i64>>>,
}

/// JSON form: `{"vertices":[..], "edges":[{"u":..,"v":..,"R":..}], "boundary":[..], "killing":{..}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<Value>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub boundary: Vec<Value>,
    #[serde(default)]
    pub killing: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub u: Value,
    pub v: Value,
    #[serde(rename = "R")]
    pub r: f64,
}

fn label_of(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn build_graph(spec: &GraphSpec) -> Result<CableGraph> {
    let labels: Vec<String> = spec.vertices.iter().map(label_of).collect();
    let mut index = HashMap::new();
    for (i, l) in labels.iter().enumerate() {
        if index.insert(l.clone(), i).is_some() {
            return Err(Error::DuplicateVertex(l.clone()));
        }
    }
    let look = |v: &Value| -> Result<usize> {
        let l = label_of(v);
        index.get(&l).copied().ok_or(Error::UnknownVertex(l))
    };
    let mut edges = Vec::with_capacity(spec.edges.len());
    for e in &spec.edges {
        edges.push((look(&e.u)?, look(&e.v)?, e.r));
    }
    let mut boundary = vec![false; labels.len()];
    for b in &spec.boundary {
        boundary[look(b)?] = true;
    }
    let mut killing = vec![0.0; labels.len()];
    for (k, rate) in &spec.killing {
        let i = index.get(k).copied().ok_or(Error::UnknownVertex(k.clone()))?;
        killing[i] = *rate;
    }
    CableGraph::new(labels, edges, boundary, killing)
}

pub fn load_graph(path: &Path) -> Result<CableGraph> {
    let text = std::fs::read_to_string(path)?;
    let spec: GraphSpec = serde_json::from_str(&text)?;
    build_graph(&spec)
}

impl CableGraph {
    pub fn new(
        labels: Vec<String>,
        edges: Vec<(usize, usize, f64)>,
        boundary: Vec<bool>,
        killing: Vec<f64>,
    ) -> Result<Self> {
        let n = labels.len();
        let mut index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(l.clone()));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut out = Vec::with_capacity(edges.len());
        for (id, &(u, v, r)) in edges.iter().enumerate() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::NonpositiveResistance(id, r));
            }
            if u == v {
                return Err(Error::SelfLoop(labels[u].clone()));
            }
            adjacency[u].push((id, v));
            adjacency[v].push((id, u));
            out.push(Edge { u, v, resistance: r });
        }
        for (i, &k) in killing.iter().enumerate() {
            if !(k >= 0.0) || !k.is_finite() {
                return Err(Error::NegativeKilling(labels[i].clone()));
            }
        }
        let g = CableGraph {
            labels,
            index,
            edges: out,
            boundary,
            killing,
            adjacency,
            coords: vec![None; n],
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if n == 0 {
            return Err(Error::NoKillingNoBoundary);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(_, w) in &self.adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::DisconnectedGraph(self.labels[i].clone()));
        }
        let has_boundary = self.boundary.iter().any(|&b| b);
        let has_killing = self
            .killing
            .iter()
            .zip(&self.boundary)
            .any(|(&k, &b)| k > 0.0 && !b);
        if !has_boundary && !has_killing {
            return Err(Error::NoKillingNoBoundary);
        }
        if self.boundary.iter().all(|&b| b) {
            return Err(Error::NoKillingNoBoundary);
        }
        Ok(())
    }

    /// Copy of the graph with the given vertices moved into the boundary.
    pub fn with_extra_boundary(&self, extra: &[usize]) -> CableGraph {
        let mut g = self.clone();
        for &v in extra {
            g.boundary[v] = true;
        }
        g
    }

    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    /// `(edge id, neighbour)` pairs at `v`.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn killing(&self, v: usize) -> f64 {
        self.killing[v]
    }

    /// Total conductance at `v`, killing included.
    pub fn total_conductance(&self, v: usize) -> f64 {
        self.adjacency[v]
            .iter()
            .map(|&(e, _)| self.edges[e].conductance())
            .sum::<f64>()
            + self.killing[v]
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| !self.boundary[v]).collect()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn vertex(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    pub fn coords(&self, v: usize) -> Option<&[i64]> {
        self.coords[v].as_deref()
    }

    fn set_coords(&mut self, v: usize, c: Vec<i64>) {
        self.coords[v] = Some(c);
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            vertices: self.labels.iter().map(|l| Value::String(l.clone())).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    u: Value::String(self.labels[e.u].clone()),
                    v: Value::String(self.labels[e.v].clone()),
                    r: e.resistance,
                })
                .collect(),
            boundary: (0..self.n_vertices())
                .filter(|&v| self.boundary[v])
                .map(|v| Value::String(self.labels[v].clone()))
                .collect(),
            killing: (0..self.n_vertices())
                .filter(|&v| self.killing[v] > 0.0)
                .map(|v| (self.labels[v].clone(), self.killing[v]))
                .collect(),
        }
    }
}

/// Path on `n` vertices labelled `0..n`, unit resistances, both ends boundary.
pub fn path(n: usize) -> Result<CableGraph> {
    if n < 3 {
        return Err(Error::InvalidConfig(format!("path needs at least 3 vertices, got {n}")));
    }
    let labels = (0..n).map(|i| i.to_string()).collect();
    let edges = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    let mut boundary = vec![false; n];
    boundary[0] = true;
    boundary[n - 1] = true;
    let mut g = CableGraph::new(labels, edges, boundary, vec![0.0; n])?;
    for i in 0..n {
        g.set_coords(i, vec![i as i64]);
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Wired,
    Free,
}

pub const WIRED_LABEL: &str = "bd";

/// `w x h` grid with unit resistances, vertices labelled `"i,j"`.
///
/// Wired: one extra boundary vertex `bd`, joined to each perimeter vertex
/// once per missing lattice neighbour. Free: no boundary, uniform killing.
pub fn grid(w: usize, h: usize, kind: BoundaryKind, killing: f64) -> Result<CableGraph> {
    lattice(&[w, h], kind, killing, &[0, 0])
}

/// Three-dimensional wired box of side `l + 1`, coordinates in `-l/2..=l/2`.
pub fn box3(l: usize) -> Result<CableGraph> {
    if l % 2 != 0 || l == 0 {
        return Err(Error::InvalidConfig(format!("box size must be even and positive, got {l}")));
    }
    let h = (l / 2) as i64;
    lattice(&[l + 1, l + 1, l + 1], BoundaryKind::Wired, 0.0, &[-h, -h, -h])
}

fn lattice(dims: &[usize], kind: BoundaryKind, killing: f64, offset: &[i64]) -> Result<CableGraph> {
    if dims.contains(&0) {
        return Err(Error::InvalidConfig("empty lattice".into()));
    }
    let n: usize = dims.iter().product();
    let coord = |mut i: usize| -> Vec<usize> {
        dims.iter()
            .map(|&d| {
                let c = i % d;
                i /= d;
                c
            })
            .collect()
    };
    let flat = |c: &[usize]| -> usize {
        let mut i = 0;
        for k in (0..dims.len()).rev() {
            i = i * dims[k] + c[k];
        }
        i
    };
    let mut labels: Vec<String> = (0..n)
        .map(|i| {
            coord(i)
                .iter()
                .zip(offset)
                .map(|(&c, &o)| (c as i64 + o).to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    let wired = kind == BoundaryKind::Wired;
    let bd = n;
    if wired {
        labels.push(WIRED_LABEL.to_string());
    }
    let mut edges = Vec::new();
    for i in 0..n {
        let c = coord(i);
        for k in 0..dims.len() {
            if c[k] + 1 < dims[k] {
                let mut d = c.clone();
                d[k] += 1;
                edges.push((i, flat(&d), 1.0));
            } else if wired {
                edges.push((i, bd, 1.0));
            }
            if c[k] == 0 && wired {
                edges.push((i, bd, 1.0));
            }
        }
    }
    let total = labels.len();
    let mut boundary = vec![false; total];
    let mut kill = vec![0.0; total];
    if wired {
        boundary[bd] = true;
    } else {
        kill[..n].fill(killing);
    }
    let mut g = CableGraph::new(labels, edges, boundary, kill)?;
    for i in 0..n {
        let c = coord(i).iter().zip(offset).map(|(&c, &o)| c as i64 + o).collect();
        g.set_coords(i, c);
    }
    Ok(g)
}

/// Three mutually adjacent interior vertices, each also joined to `bd`.
pub fn triangle() -> Result<CableGraph> {
    let labels = vec!["0".into(), "1".into(), "2".into(), WIRED_LABEL.into()];
    let edges = vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 3, 1.0), (2, 3, 1.0)];
    CableGraph::new(labels, edges, vec![false, false, false, true], vec![0.0; 4])
}

/// Label of the `k`-th subdivision vertex (1-based from `u`) on an edge of a refined graph.
pub fn subdivision_label(u: &str, v: &str, edge: usize, k: usize) -> String {
    format!("{u}~{v}#{edge}.{k}")
}

/// Splits every edge into `k` sub-edges of resistance `R/k`.
///
/// Original vertices keep their indices; subdivision vertices are appended
/// edge by edge.
pub fn refined(g: &CableGraph, k: usize) -> Result<CableGraph> {
    if k == 0 {
        return Err(Error::InvalidConfig("mesh must be at least 1".into()));
    }
    let mut labels = g.labels.clone();
    let mut boundary = g.boundary.clone();
    let mut killing = g.killing.clone();
    let mut edges = Vec::with_capacity(g.edges.len() * k);
    for (id, e) in g.edges.iter().enumerate() {
        let r = e.resistance / k as f64;
        let mut prev = e.u;
        for s in 1..k {
            let idx = labels.len();
            labels.push(subdivision_label(&g.labels[e.u], &g.labels[e.v], id, s));
            boundary.push(false);
            killing.push(0.0);
            edges.push((prev, idx, r));
            prev = idx;
        }
        edges.push((prev, e.v, r));
    }
    let mut out = CableGraph::new(labels, edges, boundary, killing)?;
    for v in 0..g.n_vertices() {
        out.coords[v] = g.coords[v].clone();
    }
    Ok(out)
}

/// Named fixtures: `pathN`, `gridWxH` (wired), `triangle`, `square`,
/// `annulus6`, `boxL` (3-d), or a path to a JSON graph file.
pub fn fixture(name: &str) -> Result<CableGraph> {
    let bad = || Error::InvalidConfig(format!("unknown graph fixture {name}"));
    if name.ends_with(".json") {
        return load_graph(Path::new(name));
    }
    match name {
        "triangle" => return triangle(),
        "square" => return grid(2, 2, BoundaryKind::Wired, 0.0),
        "annulus6" => return grid(6, 6, BoundaryKind::Wired, 0.0),
        _ => {}
    }
    if let Some(rest) = name.strip_prefix("path") {
        return path(rest.parse().map_err(|_| bad())?);
    }
    if let Some(rest) = name.strip_prefix("grid") {
        let (w, h) = match rest.split_once('x') {
            Some((w, h)) => (w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?),
            None => {
                let s = rest.parse().map_err(|_| bad())?;
                (s, s)
            }
        };
        return grid(w, h, BoundaryKind::Wired, 0.0);
    }
    if let Some(rest) = name.strip_prefix("box") {
        return box3(rest.parse().map_err(|_| bad())?);
    }
    Err(bad())
}

/// Edges crossed by the horizontal ray leaving the centre of the unit face
/// with lower-left corner `(fx, fy)` in the `+x` direction.
pub fn ray_edges(g: &CableGraph, fx: i64, fy: i64) -> Vec<bool> {
    g.edges
        .iter()
        .map(|e| match (g.coords(e.u), g.coords(e.v)) {
            (Some(a), Some(b)) if a.len() == 2 && b.len() == 2 => {
                let vertical = a[0] == b[0] && (a[1] - b[1]).abs() == 1;
                vertical && a[0] > fx && a[1].min(b[1]) == fy
            }
            _ => false,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip() {
        let g = triangle().unwrap();
        let text = serde_json::to_string(&g.to_spec()).unwrap();
        let spec: GraphSpec = serde_json::from_str(&text).unwrap();
        let h = build_graph(&spec).unwrap();
        assert_eq!(h.n_vertices(), 4);
        assert_eq!(h.edges().len(), 6);
        assert!(h.is_boundary(h.vertex("bd").unwrap()));
    }

    #[test]
    fn numeric_labels_accepted() {
        let spec: GraphSpec = serde_json::from_str(
            r#"{"vertices":[0,1,2,3],"edges":[{"u":0,"v":1,"R":1},{"u":1,"v":2,"R":1},{"u":2,"v":3,"R":1}],"boundary":[0,3]}"#,
        )
        .unwrap();
        let g = build_graph(&spec).unwrap();
        assert_eq!(g.interior(), vec![1, 2]);
    }

    #[test]
    fn build_errors() {
        let spec = |edges: &str, boundary: &str| -> GraphSpec {
            serde_json::from_str(&format!(
                r#"{{"vertices":["a","b","c"],"edges":{edges},"boundary":{boundary}}}"#
            ))
            .unwrap()
        };
        let e = build_graph(&spec(r#"[{"u":"a","v":"b","R":1}]"#, r#"["a"]"#));
        assert!(matches!(e, Err(Error::DisconnectedGraph(_))));
        let e = build_graph(&spec(r#"[{"u":"a","v":"b","R":1},{"u":"b","v":"c","R":1}]"#, "[]"));
        assert!(matches!(e, Err(Error::NoKillingNoBoundary)));
        let e = build_graph(&spec(r#"[{"u":"a","v":"b","R":0},{"u":"b","v":"c","R":1}]"#, r#"["a"]"#));
        assert!(matches!(e, Err(Error::NonpositiveResistance(0, _))));
        let e = build_graph(&spec(r#"[{"u":"a","v":"b","R":-2},{"u":"b","v":"c","R":1}]"#, r#"["a"]"#));
        assert!(matches!(e, Err(Error::NonpositiveResistance(0, _))));
    }

    #[test]
    fn grid_counts() {
        let g = grid(3, 3, BoundaryKind::Wired, 0.0).unwrap();
        assert_eq!(g.n_vertices(), 10);
        // 12 lattice edges and 12 edges to the wired vertex
        assert_eq!(g.edges().len(), 24);
        let corner = g.vertex("0,0").unwrap();
        assert_eq!(g.incident(corner).len(), 4);
        assert!(grid(2, 2, BoundaryKind::Free, 0.0).is_err());
        assert!(grid(2, 2, BoundaryKind::Free, 0.5).is_ok());
    }

    #[test]
    fn box_has_centre() {
        let g = box3(4).unwrap();
        assert_eq!(g.n_vertices(), 126);
        let o = g.vertex("0,0,0").unwrap();
        assert_eq!(g.incident(o).len(), 6);
        assert_eq!(g.coords(o), Some(&[0, 0, 0][..]));
    }

    #[test]
    fn refinement_preserves_originals() {
        let g = path(4).unwrap();
        let r = refined(&g, 4).unwrap();
        assert_eq!(r.n_vertices(), 4 + 3 * 3);
        assert_eq!(r.edges().len(), 12);
        assert!(r.edges().iter().all(|e| (e.resistance - 0.25).abs() < 1e-15));
        assert_eq!(r.label(1), "1");
        assert!(r.vertex(&subdivision_label("1", "2", 1, 2)).is_ok());
    }

    #[test]
    fn ray_crosses_vertical_edges_right_of_face() {
        let g = grid(4, 4, BoundaryKind::Wired, 0.0).unwrap();
        let ray = ray_edges(&g, 1, 1);
        let crossed: Vec<_> = g
            .edges()
            .iter()
            .zip(&ray)
            .filter(|(_, &r)| r)
            .map(|(e, _)| (g.label(e.u).to_string(), g.label(e.v).to_string()))
            .collect();
        assert_eq!(
            crossed,
            vec![("2,1".to_string(), "2,2".to_string()), ("3,1".to_string(), "3,2".to_string())]
        );
    }

    #[test]
    fn fixture_names() {
        assert_eq!(fixture("path4").unwrap().n_vertices(), 4);
        assert_eq!(fixture("grid3x3").unwrap().n_vertices(), 10);
        assert_eq!(fixture("grid3").unwrap().n_vertices(), 10);
        assert_eq!(fixture("square").unwrap().n_vertices(), 5);
        assert!(fixture("nonsense").is_err());
    }
}
