use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{fixture, refined, subdivision_label, CableGraph};
use crate::loops::Parity;
use crate::stats::MIN_SAMPLES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    TwoPoint,
    Parity,
    Switching,
    Pnew,
    Winding,
    OneEdge,
    Iic,
    Interlacement,
    Calibrate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TwoPoint => "two-point",
            ExperimentKind::Parity => "parity",
            ExperimentKind::Switching => "switching",
            ExperimentKind::Pnew => "pnew",
            ExperimentKind::Winding => "winding",
            ExperimentKind::OneEdge => "one-edge",
            ExperimentKind::Iic => "iic",
            ExperimentKind::Interlacement => "interlacement",
            ExperimentKind::Calibrate => "calibrate",
        }
    }
}

/// Deliberately wrong variants that the comparisons must reject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeControl {
    /// Even instead of odd number of crossing excursions.
    ParityEven,
    /// Crossing mass multiplied by 1.2.
    MassScale,
    /// Crossing constant 1.5 instead of 1 on a single edge.
    ConstantScale,
}

impl NegativeControl {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "parity-even" | "even" => Ok(NegativeControl::ParityEven),
            "mass-1.2" | "mass" => Ok(NegativeControl::MassScale),
            "c-1.5" | "constant" => Ok(NegativeControl::ConstantScale),
            other => Err(Error::InvalidConfig(format!("unknown negative control {other}"))),
        }
    }
}

pub const MASS_SCALE: f64 = 1.2;
pub const CONSTANT_SCALE: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub graph: String,
    pub x: Option<String>,
    pub y: Option<String>,
    pub a: f64,
    pub b: f64,
    pub mesh: usize,
    pub replicas: usize,
    pub probes: Vec<String>,
    pub seed: u64,
    pub negative_control: Option<NegativeControl>,
    /// Family-wise significance level for p-value gates.
    pub alpha: f64,
    /// Grid steps on the unit edge.
    pub steps: usize,
    /// Parity of the crossing count on the one-edge comparison.
    pub parity: Parity,
    pub box_sizes: Vec<usize>,
    /// Value pinned on the wired boundary for the direct conditioning.
    pub pin: f64,
    /// Lower-left corners of marked faces.
    pub faces: Vec<(i64, i64)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::TwoPoint,
            graph: "path4".into(),
            x: None,
            y: None,
            a: 1.0,
            b: 1.0,
            mesh: 1,
            replicas: 10_000,
            probes: Vec::new(),
            seed: 0,
            negative_control: None,
            alpha: 0.01,
            steps: 400,
            parity: Parity::Odd,
            box_sizes: vec![4, 8],
            pin: 0.05,
            faces: vec![(1, 1), (3, 3)],
        }
    }
}

impl ExperimentConfig {
    /// Defaults for a given experiment, matching the acceptance fixtures.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig { kind, ..Default::default() };
        match kind {
            ExperimentKind::Switching => c.mesh = 4,
            ExperimentKind::Pnew => c.graph = "triangle".into(),
            ExperimentKind::Winding => {
                c.graph = "annulus6".into();
                c.faces = (0..5).flat_map(|i| (0..5).map(move |j| (i, j))).collect();
            }
            ExperimentKind::Interlacement => {
                c.graph = "box4".into();
                c.mesh = 2;
                c.x = Some("0,0,0".into());
                c.y = Some("bd".into());
                c.b = 0.5;
                c.probes = ["1,0,0", "1,1,0", "2,1,0", "2,2,2"].map(String::from).to_vec();
            }
            ExperimentKind::Calibrate => {
                c.graph = "grid3x3".into();
                c.mesh = 2;
            }
            _ => {}
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.replicas < MIN_SAMPLES {
            return bad(format!("replicas {} below {}", self.replicas, MIN_SAMPLES));
        }
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return bad(format!("pinned values must be positive, got a = {}, b = {}", self.a, self.b));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if self.mesh == 0 {
            return bad("mesh must be positive".into());
        }
        if matches!(self.kind, ExperimentKind::Switching | ExperimentKind::Interlacement) && self.mesh < 2 {
            return bad("switching comparisons need mesh >= 2".into());
        }
        if self.kind == ExperimentKind::Iic && self.box_sizes.len() < 2 {
            return bad("iic needs two box sizes".into());
        }
        Ok(())
    }

    pub fn base_graph(&self) -> Result<CableGraph> {
        fixture(&self.graph)
    }

    /// Base graph refined to the configured mesh.
    pub fn graph(&self) -> Result<(CableGraph, CableGraph)> {
        let base = self.base_graph()?;
        let fine = if self.mesh > 1 { refined(&base, self.mesh)? } else { base.clone() };
        Ok((base, fine))
    }

    /// Marked vertices; defaults to the first two interior vertices.
    pub fn marks(&self, base: &CableGraph) -> Result<(usize, usize)> {
        let interior = base.interior();
        let x = match &self.x {
            Some(l) => base.vertex(l)?,
            None => *interior.first().ok_or(Error::InvalidConfig("no interior vertex".into()))?,
        };
        let y = match &self.y {
            Some(l) => base.vertex(l)?,
            None => *interior
                .iter()
                .find(|&&v| v != x)
                .ok_or(Error::InvalidConfig("need two interior vertices".into()))?,
        };
        if x == y {
            return Err(Error::SameVertex(base.label(x).to_string()));
        }
        Ok((x, y))
    }

    /// Probe vertices on the refined graph. Without explicit probes: the
    /// other interior vertices of the base graph plus the midpoints of the
    /// edges at `x`; on graphs with no other vertex, every subdivision
    /// vertex on the edges at `x` and `y`.
    pub fn probe_vertices(&self, base: &CableGraph, fine: &CableGraph, x: usize, y: usize) -> Result<Vec<usize>> {
        if !self.probes.is_empty() {
            let ps = self.probes.iter().map(|l| fine.vertex(l)).collect::<Result<Vec<_>>>()?;
            if let Some(&p) = ps.iter().find(|&&p| p == x || p == y || fine.is_boundary(p)) {
                return Err(Error::InvalidConfig(format!("probe {} must be interior and unmarked", fine.label(p))));
            }
            return Ok(ps);
        }
        let others: Vec<usize> = base.interior().into_iter().filter(|&v| v != x && v != y).collect();
        let mut out = others.clone();
        let k = self.mesh;
        for (id, e) in base.edges().iter().enumerate() {
            let at_x = e.u == x || e.v == x;
            let at_y = e.u == y || e.v == y;
            if k < 2 || !(at_x || (others.is_empty() && at_y)) {
                continue;
            }
            let steps: Vec<usize> = if others.is_empty() { (1..k).collect() } else { vec![k / 2] };
            for s in steps {
                let l = subdivision_label(base.label(e.u), base.label(e.v), id, s);
                let v = fine.vertex(&l)?;
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidConfig("no probe vertices available".into()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_with_defaults() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"kind":"switching","graph":"grid3x3","mesh":4}"#).unwrap();
        assert_eq!(c.kind, ExperimentKind::Switching);
        assert_eq!(c.replicas, 10_000);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::for_kind(ExperimentKind::Switching);
        assert!(c.validate().is_ok());
        c.mesh = 1;
        assert!(c.validate().is_err());
        let c = ExperimentConfig { replicas: 10, ..Default::default() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { a: -1.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_probes_on_path() {
        let c = ExperimentConfig::for_kind(ExperimentKind::Switching);
        let (base, fine) = c.graph().unwrap();
        let (x, y) = c.marks(&base).unwrap();
        assert_eq!((base.label(x), base.label(y)), ("1", "2"));
        let p = c.probe_vertices(&base, &fine, x, y).unwrap();
        assert_eq!(p.len(), 9);
        assert!(p.iter().all(|&v| !fine.is_boundary(v) && v != x && v != y));
    }

    #[test]
    fn negative_control_names() {
        assert_eq!(NegativeControl::parse("parity-even").unwrap(), NegativeControl::ParityEven);
        assert_eq!(NegativeControl::parse("mass-1.2").unwrap(), NegativeControl::MassScale);
        assert_eq!(NegativeControl::parse("c-1.5").unwrap(), NegativeControl::ConstantScale);
        assert!(NegativeControl::parse("x").is_err());
    }
}
