//! Independent oracles shared by the integration and acceptance targets.
#![allow(dead_code)]

use gpcert::gp::KernelParams;
use nalgebra::DMatrix;

pub type Mat = Vec<Vec<f64>>;

pub fn se(a: &[f64], b: &[f64], p: &KernelParams) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(&p.lengthscales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    p.signal_variance * (-0.5 * r2).exp()
}

/// Inverse and log-determinant by Gauss-Jordan with partial pivoting.
pub fn inverse_logdet(a: &Mat) -> (Mat, f64) {
    let n = a.len();
    let mut m: Mat = a.clone();
    let mut inv: Mat = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let mut logdet = 0.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        inv.swap(c, p);
        let piv = m[c][c];
        logdet += piv.abs().ln();
        for k in 0..n {
            m[c][k] /= piv;
            inv[c][k] /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                for k in 0..n {
                    m[r][k] -= f * m[c][k];
                    inv[r][k] -= f * inv[c][k];
                }
            }
        }
    }
    (inv, logdet)
}

pub struct Oracle {
    inv: Mat,
    logdet: f64,
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    params: KernelParams,
}

impl Oracle {
    pub fn new(xs: &[Vec<f64>], ys: &[f64], params: &KernelParams, jitter: f64) -> Self {
        let n = xs.len();
        let k: Mat = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let diag = if i == j { params.noise_variance + jitter } else { 0.0 };
                        se(&xs[i], &xs[j], params) + diag
                    })
                    .collect()
            })
            .collect();
        let (inv, logdet) = inverse_logdet(&k);
        Oracle {
            inv,
            logdet,
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            params: params.clone(),
        }
    }

    pub fn lml(&self) -> f64 {
        let n = self.ys.len();
        let quad: f64 = (0..n)
            .map(|i| (0..n).map(|j| self.ys[i] * self.inv[i][j] * self.ys[j]).sum::<f64>())
            .sum();
        -0.5 * quad - 0.5 * self.logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    /// (mean, variance, weights)
    pub fn posterior(&self, x: &[f64]) -> (f64, f64, Vec<f64>) {
        let n = self.ys.len();
        let ks: Vec<f64> = self.xs.iter().map(|xi| se(xi, x, &self.params)).collect();
        let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| self.inv[i][j] * ks[j]).sum()).collect();
        let mean = w.iter().zip(&self.ys).map(|(a, b)| a * b).sum();
        let var = self.params.signal_variance - w.iter().zip(&ks).map(|(a, b)| a * b).sum::<f64>();
        (mean, var, w)
    }
}

/// Constraint rows `a . dx <= b` for `0 <= dx <= x` and `|M (x - dx)| <= f`.
pub fn constraints(m: &DMatrix<f64>, x: &[f64], f: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let (l, d) = m.shape();
    let mut rows = Vec::new();
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        rows.push((e.clone(), x[j]));
        e[j] = -1.0;
        rows.push((e, 0.0));
    }
    for i in 0..l {
        let flow: f64 = (0..d).map(|j| m[(i, j)] * x[j]).sum();
        let row: Vec<f64> = (0..d).map(|j| m[(i, j)]).collect();
        // flow - row.dx <= f  and  -(flow - row.dx) <= f
        rows.push((row.iter().map(|v| -v).collect(), f[i] - flow));
        rows.push((row, f[i] + flow));
    }
    rows
}

pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, v)| r.iter().copied().chain([*v]).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-10 {
            return None;
        }
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let k = m[r][c] / m[c][c];
                let pivot_row = m[c].clone();
                for (dst, src) in m[r].iter_mut().zip(&pivot_row).skip(c) {
                    *dst -= k * src;
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

pub fn choose(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = choose(n - 1, k);
    for mut c in choose(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Minimum total curtailment over every basic feasible point.
pub fn vertex_oracle(m: &DMatrix<f64>, x: &[f64], f: &[f64]) -> f64 {
    let d = x.len();
    let rows = constraints(m, x, f);
    let mut best = f64::INFINITY;
    for set in choose(rows.len(), d) {
        let a: Vec<Vec<f64>> = set.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = set.iter().map(|&i| rows[i].1).collect();
        if let Some(v) = solve(&a, &b) {
            let feasible = rows
                .iter()
                .all(|(r, rhs)| r.iter().zip(&v).map(|(p, q)| p * q).sum::<f64>() <= rhs + 1e-9);
            if feasible {
                best = best.min(v.iter().sum());
            }
        }
    }
    best
}

/// Grid over the leading coordinates with the smallest feasible last
/// coordinate computed directly. Requires a non-negative `m`.
pub fn grid_oracle(m: &DMatrix<f64>, x: &[f64], f: &[f64], steps: usize) -> f64 {
    let (l, d) = m.shape();
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; d - 1];
    loop {
        let dx: Vec<f64> = idx.iter().zip(x).map(|(&k, &xj)| xj * k as f64 / steps as f64).collect();
        let mut need = 0.0f64;
        let mut ok = true;
        for i in 0..l {
            let partial: f64 = (0..d - 1).map(|j| m[(i, j)] * (x[j] - dx[j])).sum::<f64>() + m[(i, d - 1)] * x[d - 1];
            let excess = partial - f[i];
            if excess > 0.0 {
                if m[(i, d - 1)] <= 0.0 {
                    ok = false;
                    break;
                }
                need = need.max(excess / m[(i, d - 1)]);
            }
        }
        if ok && need <= x[d - 1] {
            best = best.min(dx.iter().sum::<f64>() + need);
        }
        let mut k = 0;
        while k < d - 1 {
            idx[k] += 1;
            if idx[k] <= steps {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d - 1 {
            return best;
        }
    }
}
