//! Box-constrained limited-memory quasi-Newton minimizer.

use std::collections::VecDeque;

const MEMORY: usize = 8;
const ARMIJO: f64 = 1e-4;
const PG_TOL: f64 = 1e-6;
const F_TOL: f64 = 1e-10;

/// Minimizes `f` over the box `[lo, hi]` starting at `x0` (clamped).
///
/// `f` returns the objective and its gradient, or `None` where it is not
/// defined; such points are rejected by the line search. Returns the best
/// point found together with its objective value, or `None` when `f` is
/// undefined at the start.
pub fn minimize_box<F>(f: F, x0: &[f64], lo: &[f64], hi: &[f64], max_iters: usize) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let clamp = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let (mut fx, mut g) = f(&x)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);

    for iter in 0..max_iters {
        // Variables pinned at a bound with the gradient pushing outward are frozen.
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)))
            .collect();
        let pg_norm = (0..n).filter(|&i| free[i]).map(|i| g[i].abs()).fold(0.0, f64::max);
        if pg_norm < PG_TOL {
            break;
        }

        let mut p = two_loop(&g, &history, &free);
        if !(dot(&p, &g) < 0.0) {
            p = (0..n).map(|i| if free[i] { -g[i] } else { 0.0 }).collect();
            history.clear();
        }

        let mut t = if iter == 0 && history.is_empty() {
            (1.0 / pg_norm).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + t * b).collect();
            clamp(&mut xn);
            let decrease: f64 = xn.iter().zip(&x).zip(&g).map(|((a, b), gi)| (a - b) * gi).sum();
            if decrease < 0.0 {
                if let Some((fn_, gn)) = f(&xn) {
                    if fn_.is_finite() && fn_ <= fx + ARMIJO * decrease {
                        accepted = Some((xn, fn_, gn));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else { break };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let converged = (fx - fn_).abs() <= F_TOL * (1.0 + fx.abs());
        x = xn;
        fx = fn_;
        g = gn;
        if converged {
            break;
        }
    }
    Some((x, fx))
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, free: &[bool]) -> Vec<f64> {
    let mut q: Vec<f64> = g.iter().zip(free).map(|(gi, &f)| if f { *gi } else { 0.0 }).collect();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for i in 0..q.len() {
            q[i] -= a * y[i];
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for i in 0..q.len() {
            q[i] += (a - b) * s[i];
        }
    }
    q.iter()
        .zip(free)
        .map(|(v, &f)| if f { -v } else { 0.0 })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
