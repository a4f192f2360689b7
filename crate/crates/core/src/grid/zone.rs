use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ptdf::ptdf_from_topology;
use crate::error::{Error, Result};

/// On-disk zone description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneConfig {
    pub name: String,
    pub slack: String,
    pub nodes: Vec<String>,
    pub lines: Vec<LineConfig>,
    pub res_units: Vec<ResUnitConfig>,
    /// Fraction of each line limit the controller steers flows to. `null`
    /// disables the controller.
    #[serde(default)]
    pub mpc_target_fraction: Option<f64>,
    /// Line-by-unit transfer matrix, one row per expanded line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ptdf: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineConfig {
    pub from: String,
    pub to: String,
    pub susceptance: f64,
    pub f_max: f64,
    /// Parallel identical circuits; each becomes its own line.
    #[serde(default = "one")]
    pub circuits: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResUnitConfig {
    pub node: String,
    pub x_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
    pub f_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResUnit {
    pub node: usize,
    pub x_max: f64,
}

/// Validated zone with its transfer matrix. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub name: String,
    pub nodes: Vec<String>,
    pub lines: Vec<Line>,
    pub res_units: Vec<ResUnit>,
    pub slack: usize,
    pub mpc_target_fraction: Option<f64>,
    ptdf: DMatrix<f64>,
}

impl Zone {
    pub fn from_config(cfg: &ZoneConfig) -> Result<Self> {
        let index: HashMap<&str, usize> = cfg.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        if index.len() != cfg.nodes.len() {
            return Err(Error::InvalidZone("duplicate node names".into()));
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::InvalidZone(format!("unknown node `{name}`")))
        };
        let slack = lookup(&cfg.slack)?;
        let mut lines = Vec::new();
        for l in &cfg.lines {
            if !(l.susceptance > 0.0 && l.susceptance.is_finite()) {
                return Err(Error::InvalidZone(format!("line {}-{}: susceptance must be positive", l.from, l.to)));
            }
            if !(l.f_max > 0.0) {
                return Err(Error::InvalidZone(format!("line {}-{}: f_max must be positive", l.from, l.to)));
            }
            let (from, to) = (lookup(&l.from)?, lookup(&l.to)?);
            if from == to {
                return Err(Error::InvalidZone(format!("line {}-{} is a self loop", l.from, l.to)));
            }
            for _ in 0..l.circuits.max(1) {
                lines.push(Line {
                    from,
                    to,
                    susceptance: l.susceptance,
                    f_max: l.f_max,
                });
            }
        }
        if lines.is_empty() {
            return Err(Error::InvalidZone("zone has no lines".into()));
        }
        let mut res_units = Vec::new();
        for u in &cfg.res_units {
            if !(u.x_max > 0.0 && u.x_max.is_finite()) {
                return Err(Error::InvalidZone(format!("unit at {}: x_max must be positive", u.node)));
            }
            res_units.push(ResUnit {
                node: lookup(&u.node)?,
                x_max: u.x_max,
            });
        }
        if res_units.is_empty() {
            return Err(Error::InvalidZone("zone has no RES units".into()));
        }
        if let Some(t) = cfg.mpc_target_fraction {
            if !(t > 0.0) {
                return Err(Error::InvalidZone("mpc_target_fraction must be positive".into()));
            }
        }
        let mut zone = Zone {
            name: cfg.name.clone(),
            nodes: cfg.nodes.clone(),
            lines,
            res_units,
            slack,
            mpc_target_fraction: cfg.mpc_target_fraction,
            ptdf: DMatrix::zeros(0, 0),
        };
        zone.check_connected()?;
        zone.ptdf = match &cfg.ptdf {
            Some(rows) => {
                let (l, d) = (zone.n_lines(), zone.dim());
                if rows.len() != l || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidZone(format!("ptdf must be {l} x {d}")));
                }
                if rows.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidZone("ptdf entries must be finite".into()));
                }
                DMatrix::from_fn(l, d, |i, j| rows[i][j])
            }
            None => ptdf_from_topology(&zone)?,
        };
        Ok(zone)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ZoneConfig = serde_json::from_str(&text)?;
        Zone::from_config(&cfg)
    }

    /// One bus feeding the slack through a single line with transfer row `m`.
    pub fn single_line(m: Vec<f64>, x_max: Vec<f64>, f_max: f64, mpc_target_fraction: Option<f64>) -> Result<Self> {
        let cfg = ZoneConfig {
            name: "single-line".into(),
            slack: "slack".into(),
            nodes: vec!["slack".into(), "bus".into()],
            lines: vec![LineConfig {
                from: "bus".into(),
                to: "slack".into(),
                susceptance: 1.0,
                f_max,
                circuits: 1,
            }],
            res_units: x_max
                .iter()
                .map(|&x| ResUnitConfig {
                    node: "bus".into(),
                    x_max: x,
                })
                .collect(),
            mpc_target_fraction,
            ptdf: Some(vec![m]),
        };
        Zone::from_config(&cfg)
    }

    /// The univariate toy: unit transfer factor, production in `[0, 1.2]`,
    /// line limit 1 and flows steered to 0.99.
    pub fn univariate_toy() -> Self {
        Zone::single_line(vec![1.0], vec![1.2], 1.0, Some(0.99)).expect("valid toy zone")
    }

    /// Scenario dimension (number of RES units).
    pub fn dim(&self) -> usize {
        self.res_units.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn ptdf(&self) -> &DMatrix<f64> {
        &self.ptdf
    }

    pub fn f_max(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.f_max).collect()
    }

    pub fn x_max(&self) -> Vec<f64> {
        self.res_units.iter().map(|u| u.x_max).collect()
    }

    /// Maps production to per-unit-of-capacity coordinates in `[0, 1]`.
    pub fn normalize(&self, production: &[f64]) -> Vec<f64> {
        production.iter().zip(&self.res_units).map(|(x, u)| x / u.x_max).collect()
    }

    pub fn denormalize(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter().zip(&self.res_units).map(|(x, u)| x * u.x_max).collect()
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for l in &self.lines {
            adj[l.from].push(l.to);
            adj[l.to].push(l.from);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![self.slack];
        seen[self.slack] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(Error::Disconnected(self.nodes[i].clone())),
            None => Ok(()),
        }
    }
}
