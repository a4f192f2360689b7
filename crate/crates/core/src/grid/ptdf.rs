use nalgebra::DMatrix;

use super::Zone;
use crate::error::{Error, Result};

/// DC transfer factors from RES-unit injections to line flows, referenced to
/// the slack bus. Entry `(l, u)` is the flow on line `l` (positive from
/// `from` to `to`) caused by one unit injected at unit `u`'s node and
/// withdrawn at the slack.
pub fn ptdf_from_topology(zone: &Zone) -> Result<DMatrix<f64>> {
    let n = zone.nodes.len();
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for l in &zone.lines {
        let b = l.susceptance;
        lap[(l.from, l.from)] += b;
        lap[(l.to, l.to)] += b;
        lap[(l.from, l.to)] -= b;
        lap[(l.to, l.from)] -= b;
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != zone.slack).collect();
    let reduced = DMatrix::from_fn(keep.len(), keep.len(), |i, j| lap[(keep[i], keep[j])]);
    let inv = reduced
        .try_inverse()
        .ok_or_else(|| Error::InvalidZone("singular reduced susceptance matrix".into()))?;
    // Angle sensitivities, zero row/column at the slack.
    let mut x = DMatrix::<f64>::zeros(n, n);
    for (i, &a) in keep.iter().enumerate() {
        for (j, &b) in keep.iter().enumerate() {
            x[(a, b)] = inv[(i, j)];
        }
    }
    Ok(DMatrix::from_fn(zone.n_lines(), zone.dim(), |l, u| {
        let line = &zone.lines[l];
        let node = zone.res_units[u].node;
        line.susceptance * (x[(line.from, node)] - x[(line.to, node)])
    }))
}
