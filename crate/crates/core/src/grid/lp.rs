//! Curtailment LP solved by a dense bounded-variable primal simplex.
//!
//! ```text
//! min  sum_i dx_i
//! s.t. -f <= M (x - dx) <= f,   0 <= dx <= x
//! ```
//!
//! Each line gets a row variable `r_l = (M dx)_l` bounded by
//! `[(Mx)_l - f_l, (Mx)_l + f_l]`. Starting from `dx = x` (all production
//! curtailed, zero flows) the initial basis of row variables is feasible, so
//! no phase one is needed. Bland's rule picks entering and leaving variables.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curtailment {
    pub delta: Vec<f64>,
    pub status: LpStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Simplex {
    /// `B^-1 A`, row-major `m x n`.
    tab: Vec<f64>,
    m: usize,
    n: usize,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    state: Vec<State>,
    /// Variable index basic in each row.
    basis: Vec<usize>,
}

impl Simplex {
    fn reduced_cost(&self, j: usize) -> f64 {
        let mut d = self.cost[j];
        for (i, &b) in self.basis.iter().enumerate() {
            d -= self.cost[b] * self.tab[i * self.n + j];
        }
        d
    }

    fn solve(&mut self) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            // Bland: lowest-index improving nonbasic variable.
            let entering = (0..self.n).find_map(|j| {
                let width = self.upper[j] - self.lower[j];
                match self.state[j] {
                    State::AtLower if width > EPS && self.reduced_cost(j) < -EPS => Some((j, 1.0)),
                    State::AtUpper if width > EPS && self.reduced_cost(j) > EPS => Some((j, -1.0)),
                    _ => None,
                }
            });
            let Some((j, dir)) = entering else {
                return Ok(());
            };

            let mut best_room = f64::INFINITY;
            let mut leave: Option<(usize, usize, f64)> = None; // (row, var, rate)
            for i in 0..self.m {
                let rate = -dir * self.tab[i * self.n + j];
                let b = self.basis[i];
                let room = if rate < -EPS {
                    (self.value[b] - self.lower[b]) / -rate
                } else if rate > EPS {
                    (self.upper[b] - self.value[b]) / rate
                } else {
                    continue;
                };
                if !room.is_finite() {
                    continue;
                }
                let room = room.max(0.0);
                // Ties go to the lowest variable index.
                if room < best_room || (room == best_room && leave.is_some_and(|(_, v, _)| b < v)) {
                    best_room = room;
                    leave = Some((i, b, rate));
                }
            }
            let flip = self.upper[j] - self.lower[j];
            let step = if flip <= best_room {
                leave = None;
                flip
            } else {
                best_room
            };
            if !step.is_finite() {
                return Err(Error::Lp("unbounded direction".into()));
            }

            self.value[j] += dir * step;
            for i in 0..self.m {
                let rate = -dir * self.tab[i * self.n + j];
                self.value[self.basis[i]] += rate * step;
            }

            match leave {
                None => {
                    // Bound flip.
                    self.state[j] = if dir > 0.0 { State::AtUpper } else { State::AtLower };
                    self.value[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
                }
                Some((r, b, rate)) => {
                    if rate < 0.0 {
                        self.state[b] = State::AtLower;
                        self.value[b] = self.lower[b];
                    } else {
                        self.state[b] = State::AtUpper;
                        self.value[b] = self.upper[b];
                    }
                    self.pivot(r, j);
                    self.state[j] = State::Basic(r);
                    self.basis[r] = j;
                }
            }
        }
        Err(Error::Lp(format!("no convergence after {MAX_PIVOTS} pivots")))
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.n;
        let p = self.tab[r * n + j];
        for k in 0..n {
            self.tab[r * n + k] /= p;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * n + j];
            if f != 0.0 {
                for k in 0..n {
                    self.tab[i * n + k] -= f * self.tab[r * n + k];
                }
            }
        }
    }
}

/// Minimum total curtailment keeping every line within `f_limit`.
///
/// Lines with an infinite limit are unconstrained. Returns the zero vector
/// when no limit is violated at full production.
pub fn mpc_curtailment(m: &DMatrix<f64>, x: &[f64], f_limit: &[f64]) -> Result<Curtailment> {
    let (n_lines, d) = m.shape();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    if f_limit.len() != n_lines {
        return Err(Error::DimensionMismatch {
            expected: n_lines,
            got: f_limit.len(),
        });
    }
    if x.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("production must be finite and non-negative".into()));
    }
    if f_limit.iter().any(|f| !(*f > 0.0)) {
        return Err(Error::InvalidParameter("flow limits must be positive".into()));
    }

    let flow0: Vec<f64> = (0..n_lines).map(|l| (0..d).map(|j| m[(l, j)] * x[j]).sum()).collect();
    let active: Vec<usize> = (0..n_lines).filter(|&l| f_limit[l].is_finite()).collect();
    if active.iter().all(|&l| flow0[l].abs() <= f_limit[l]) {
        return Ok(Curtailment {
            delta: vec![0.0; d],
            status: LpStatus::Optimal,
        });
    }

    let rows = active.len();
    let n = d + rows;
    let mut tab = vec![0.0; rows * n];
    for (i, &l) in active.iter().enumerate() {
        // r_l - sum_j M_lj dx_j = 0, already in basis form (B = I).
        for j in 0..d {
            tab[i * n + j] = -m[(l, j)];
        }
        tab[i * n + d + i] = 1.0;
    }
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut value = vec![0.0; n];
    let mut state = vec![State::AtUpper; n];
    let mut cost = vec![0.0; n];
    for j in 0..d {
        upper[j] = x[j];
        value[j] = x[j];
        cost[j] = 1.0;
    }
    for (i, &l) in active.iter().enumerate() {
        lower[d + i] = flow0[l] - f_limit[l];
        upper[d + i] = flow0[l] + f_limit[l];
        value[d + i] = flow0[l];
        state[d + i] = State::Basic(i);
    }
    let mut lp = Simplex {
        tab,
        m: rows,
        n,
        cost,
        lower,
        upper,
        value,
        state,
        basis: (d..n).collect(),
    };
    lp.solve()?;

    let delta: Vec<f64> = (0..d).map(|j| lp.value[j].clamp(0.0, x[j])).collect();
    for &l in &active {
        let flow: f64 = (0..d).map(|j| m[(l, j)] * (x[j] - delta[j])).sum();
        if flow.abs() > f_limit[l] + FEAS_TOL * (1.0 + f_limit[l]) {
            return Err(Error::Lp(format!(
                "line {l} flow {flow} exceeds limit {} after solve",
                f_limit[l]
            )));
        }
    }
    Ok(Curtailment {
        delta,
        status: LpStatus::Optimal,
    })
}
