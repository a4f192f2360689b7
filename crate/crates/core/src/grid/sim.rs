use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mpc_curtailment, LpStatus, Zone};
use crate::error::{Error, Result};

/// RES production per unit, each component in `[0, x_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub production: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Largest `|flow| / f_max` over all lines after curtailment.
    pub max_rel_charge: f64,
    pub curtailment: Vec<f64>,
    pub flows: Vec<f64>,
    pub lp_status: LpStatus,
}

/// Runs the curtailment controller and DC load flow for one scenario.
pub fn simulate(zone: &Zone, s: &Scenario) -> Result<SimResult> {
    let d = zone.dim();
    if s.production.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: s.production.len(),
        });
    }
    for (x, u) in s.production.iter().zip(&zone.res_units) {
        if !(*x >= 0.0 && *x <= u.x_max) {
            return Err(Error::InvalidParameter(format!(
                "production {x} outside [0, {}]",
                u.x_max
            )));
        }
    }
    let m = zone.ptdf();
    let (curtailment, lp_status) = match zone.mpc_target_fraction {
        Some(frac) => {
            let limits: Vec<f64> = zone.lines.iter().map(|l| frac * l.f_max).collect();
            let c = mpc_curtailment(m, &s.production, &limits)?;
            (c.delta, c.status)
        }
        None => (vec![0.0; d], LpStatus::Optimal),
    };
    let injected: Vec<f64> = s.production.iter().zip(&curtailment).map(|(x, c)| x - c).collect();
    let flows: Vec<f64> = (0..zone.n_lines())
        .map(|l| (0..d).map(|j| m[(l, j)] * injected[j]).sum())
        .collect();
    let max_rel_charge = flows
        .iter()
        .zip(&zone.lines)
        .map(|(f, l)| f.abs() / l.f_max)
        .fold(0.0, f64::max);
    Ok(SimResult {
        max_rel_charge,
        curtailment,
        flows,
        lp_status,
    })
}

/// Single line, single unit: `m * min(x, f_max / m)`.
pub fn toy_univariate(m: f64, f_max: f64, x: f64) -> f64 {
    m * x.min(f_max / m)
}

/// Two units feeding one line, flow capped at `f_max` by the curtailment LP.
pub fn toy_bivariate(m: [f64; 2], f_max: f64, x: [f64; 2]) -> Result<f64> {
    let ptdf = DMatrix::from_row_slice(1, 2, &m);
    let c = mpc_curtailment(&ptdf, &x, &[f_max])?;
    Ok(m[0] * (x[0] - c.delta[0]) + m[1] * (x[1] - c.delta[1]))
}

/// Independent uniform draw per unit on `[0, x_max)`.
pub fn sample_scenario(zone: &Zone, rng: &mut ChaCha8Rng) -> Scenario {
    Scenario {
        production: zone.res_units.iter().map(|u| rng.gen::<f64>() * u.x_max).collect(),
    }
}

/// The first `n` scenarios of the stream drawn from `rng`.
pub fn scenario_stream(zone: &Zone, rng: &mut ChaCha8Rng, n: usize) -> Vec<Scenario> {
    (0..n).map(|_| sample_scenario(zone, rng)).collect()
}
