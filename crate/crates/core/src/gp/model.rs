use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::{optimize::minimize_box, Dataset, KernelParams};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::stats::normal_quantile;

/// Diagonal jitter tried in order until the Cholesky factorization succeeds.
/// The unjittered attempt comes first so noiseless data is interpolated exactly.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// A GP conditioned on a dataset. Immutable; queries take `&self`.
#[derive(Debug, Clone)]
pub struct GpModel {
    params: KernelParams,
    dim: usize,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
    /// Lower Cholesky factor of `K + (noise + jitter) I`, column-major.
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
}

/// Predictive distribution at one query point, with its decomposition
/// `mean = sum(weights * y)` and `std^2 = prior_var - var_reduction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mean: f64,
    pub std: f64,
    pub weights: Vec<f64>,
    pub prior_var: f64,
    pub var_reduction: f64,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Number of optimizer starts; the first is always the supplied init.
    pub starts: usize,
    pub max_iters: usize,
    /// Noise variance used during and after fitting.
    pub noise_floor: f64,
    pub signal_variance_bounds: (f64, f64),
    /// Lengthscale bounds as multiples of the per-dimension input range.
    pub lengthscale_range_factors: (f64, f64),
    /// Input range used to scale the lengthscale bounds; data range if `None`.
    pub input_range: Option<Vec<f64>>,
    pub exec: Exec,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            starts: 5,
            max_iters: 200,
            noise_floor: 1e-8,
            signal_variance_bounds: (1e-4, 1e2),
            lengthscale_range_factors: (1e-2, 1e2),
            input_range: None,
            exec: Exec::default(),
        }
    }
}

/// When to re-optimize hyperparameters as the dataset grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefitPolicy {
    /// Refit after every insertion while the dataset has at most this many rows.
    pub every_until: usize,
    /// Past `every_until`, refit once per this many insertions.
    pub then_every: usize,
    /// Refits start from the current hyperparameters only, except at dataset
    /// sizes that are powers of two where the full multi-start is run.
    pub warm_start: bool,
    /// Hyperparameters keep their initial values until the dataset has this
    /// many rows; `None` means `2 * dim + 1`.
    pub fit_from: Option<usize>,
}

impl Default for RefitPolicy {
    fn default() -> Self {
        RefitPolicy {
            every_until: 200,
            then_every: 10,
            warm_start: true,
            fit_from: None,
        }
    }
}

impl RefitPolicy {
    pub fn fit_threshold(&self, dim: usize) -> usize {
        self.fit_from.unwrap_or(2 * dim + 1)
    }

    pub fn should_refit(&self, n: usize) -> bool {
        n <= self.every_until || (n - self.every_until).is_multiple_of(self.then_every.max(1))
    }

    /// Optimizer starts to use for a refit at dataset size `n`.
    pub fn starts_for(&self, n: usize, full: usize) -> usize {
        if !self.warm_start || n.is_power_of_two() {
            full
        } else {
            1
        }
    }
}

fn gram(inputs: &[f64], dim: usize, params: &KernelParams) -> DMatrix<f64> {
    let n = inputs.len().checked_div(dim).unwrap_or(0);
    let mut k = DMatrix::zeros(n, n);
    for a in 0..n {
        let xa = &inputs[a * dim..(a + 1) * dim];
        k[(a, a)] = params.signal_variance;
        for b in 0..a {
            let v = params.eval_unchecked(xa, &inputs[b * dim..(b + 1) * dim]);
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }
    k
}

fn closest_pair(inputs: &[f64], dim: usize) -> (usize, usize, f64) {
    let n = inputs.len() / dim.max(1);
    let mut best = (0, 0, f64::INFINITY);
    for a in 0..n {
        for b in 0..a {
            let d2: f64 = (0..dim)
                .map(|j| (inputs[a * dim + j] - inputs[b * dim + j]).powi(2))
                .sum();
            if d2 < best.2 {
                best = (b, a, d2);
            }
        }
    }
    (best.0, best.1, best.2.sqrt())
}

/// Factorizes `kf + (noise + jitter) I`, escalating the jitter along [`JITTER_LADDER`].
fn factorize(
    kf: &DMatrix<f64>,
    inputs: &[f64],
    dim: usize,
    noise: f64,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    for &jitter in &JITTER_LADDER {
        let mut m = kf.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += noise + jitter;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, jitter));
        }
    }
    let (row_a, row_b, distance) = closest_pair(inputs, dim);
    Err(Error::SingularData {
        jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        row_a,
        row_b,
        distance,
    })
}

fn check_data(data: &Dataset, params: &KernelParams) -> Result<()> {
    params.validate()?;
    if data.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: data.dim(),
        });
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// Log marginal likelihood and its gradient with respect to
/// `[ln signal_variance, ln lengthscale_0, ..]`.
fn lml_with_grad(
    inputs: &[f64],
    outputs: &[f64],
    dim: usize,
    params: &KernelParams,
    want_grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    let n = outputs.len();
    let kf = gram(inputs, dim, params);
    let (chol, _) = factorize(&kf, inputs, dim, params.noise_variance)?;
    let y = DVector::from_column_slice(outputs);
    let alpha = chol.solve(&y);
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    let lml = -0.5 * y.dot(&alpha) - log_det_half - 0.5 * n as f64 * (2.0 * PI).ln();
    if !want_grad {
        return Ok((lml, None));
    }
    let kinv = chol.inverse();
    let mut grad = vec![0.0; dim + 1];
    for a in 0..n {
        let xa = &inputs[a * dim..(a + 1) * dim];
        let w_aa = alpha[a] * alpha[a] - kinv[(a, a)];
        grad[0] += 0.5 * w_aa * kf[(a, a)];
        for b in 0..a {
            let w = (alpha[a] * alpha[b] - kinv[(a, b)]) * kf[(a, b)];
            grad[0] += w;
            let xb = &inputs[b * dim..(b + 1) * dim];
            for i in 0..dim {
                let t = (xa[i] - xb[i]) / params.lengthscales[i];
                grad[i + 1] += w * t * t;
            }
        }
    }
    Ok((lml, Some(grad)))
}

/// `-0.5 y^T alpha - sum(ln diag L) - (N/2) ln 2 pi`.
pub fn log_marginal_likelihood(data: &Dataset, params: &KernelParams) -> Result<f64> {
    check_data(data, params)?;
    lml_with_grad(data.inputs_flat(), data.outputs(), data.dim(), params, false).map(|r| r.0)
}

/// Log marginal likelihood with its gradient in log-parameter space,
/// ordered `[ln signal_variance, ln lengthscales..]`.
pub fn log_marginal_likelihood_grad(data: &Dataset, params: &KernelParams) -> Result<(f64, Vec<f64>)> {
    check_data(data, params)?;
    let (v, g) = lml_with_grad(data.inputs_flat(), data.outputs(), data.dim(), params, true)?;
    Ok((v, g.expect("gradient requested")))
}

fn to_params(theta: &[f64], noise: f64) -> KernelParams {
    KernelParams {
        signal_variance: theta[0].exp(),
        lengthscales: theta[1..].iter().map(|v| v.exp()).collect(),
        noise_variance: noise,
    }
}

/// Maximizes the log marginal likelihood over signal variance and
/// lengthscales from several starts and conditions the GP on `data`.
pub fn fit(data: &Dataset, init: &KernelParams, cfg: &FitConfig) -> Result<GpModel> {
    check_data(data, init)?;
    let dim = data.dim();
    let noise = init.noise_variance.max(cfg.noise_floor);
    let range: Vec<f64> = cfg
        .input_range
        .clone()
        .unwrap_or_else(|| data.input_range())
        .into_iter()
        .map(|r| if r > 0.0 && r.is_finite() { r } else { 1.0 })
        .collect();
    if range.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: range.len(),
        });
    }
    let (sv_lo, sv_hi) = cfg.signal_variance_bounds;
    let (lf_lo, lf_hi) = cfg.lengthscale_range_factors;
    let mut lo = vec![sv_lo.ln()];
    let mut hi = vec![sv_hi.ln()];
    for r in &range {
        lo.push((lf_lo * r).ln());
        hi.push((lf_hi * r).ln());
    }

    let mean_sq = data.outputs().iter().map(|y| y * y).sum::<f64>() / data.len() as f64;
    let mut starts = Vec::with_capacity(cfg.starts.max(1));
    let mut theta0 = vec![init.signal_variance.ln()];
    theta0.extend(init.lengthscales.iter().map(|l| l.ln()));
    starts.push(theta0);
    const LS_FACTORS: [f64; 6] = [0.3, 1.0, 3.0, 0.1, 10.0, 0.5];
    const SV_FACTORS: [f64; 6] = [1.0, 2.0, 4.0, 0.5, 8.0, 1.0];
    for k in 1..cfg.starts.max(1) {
        let j = (k - 1) % LS_FACTORS.len();
        let mut t = vec![(mean_sq.max(1e-2) * SV_FACTORS[j]).ln()];
        t.extend(range.iter().map(|r| (r * LS_FACTORS[j]).ln()));
        starts.push(t);
    }

    let inputs = data.inputs_flat();
    let outputs = data.outputs();
    let objective = |theta: &[f64]| -> Option<(f64, Vec<f64>)> {
        let p = to_params(theta, noise);
        match lml_with_grad(inputs, outputs, dim, &p, true) {
            Ok((v, Some(g))) if v.is_finite() => Some((-v, g.into_iter().map(|x| -x).collect())),
            _ => None,
        }
    };
    let results = cfg
        .exec
        .map(&starts, |s| minimize_box(objective, s, &lo, &hi, cfg.max_iters));
    let best = results
        .into_iter()
        .flatten()
        .fold(None::<(Vec<f64>, f64)>, |acc, (x, fx)| match acc {
            Some((_, fb)) if fb <= fx => acc,
            _ => Some((x, fx)),
        });
    let params = match best {
        Some((theta, _)) => to_params(&theta, noise),
        // No start was factorizable: surface the singular-data error.
        None => {
            let mut p = init.clone();
            p.noise_variance = noise;
            lml_with_grad(inputs, outputs, dim, &p, false)?;
            p
        }
    };
    GpModel::condition(data, params)
}

impl GpModel {
    /// Conditions the GP on `data` with fixed hyperparameters.
    pub fn condition(data: &Dataset, params: KernelParams) -> Result<Self> {
        check_data(data, &params)?;
        let dim = data.dim();
        let kf = gram(data.inputs_flat(), dim, &params);
        let (chol, jitter) = factorize(&kf, data.inputs_flat(), dim, params.noise_variance)?;
        let alpha = chol.solve(&DVector::from_column_slice(data.outputs()));
        Ok(GpModel {
            params,
            dim,
            inputs: data.inputs_flat().to_vec(),
            outputs: data.outputs().to_vec(),
            chol: chol.unpack(),
            alpha,
            jitter,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Jitter that was added to the diagonal to factorize the Gram matrix.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn train_input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn train_outputs(&self) -> &[f64] {
        &self.outputs
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn cross_cov(&self, x: &[f64]) -> Vec<f64> {
        self.inputs
            .chunks_exact(self.dim)
            .map(|r| self.params.eval_unchecked(r, x))
            .collect()
    }

    /// Solves `L v = b` in place.
    fn forward_solve(&self, v: &mut [f64]) {
        let n = v.len();
        let l = self.chol.as_slice();
        for j in 0..n {
            let col = &l[j * n..(j + 1) * n];
            v[j] /= col[j];
            let vj = v[j];
            for i in j + 1..n {
                v[i] -= col[i] * vj;
            }
        }
    }

    /// Solves `L^T w = b` in place.
    fn backward_solve(&self, w: &mut [f64]) {
        let n = w.len();
        let l = self.chol.as_slice();
        for j in (0..n).rev() {
            let col = &l[j * n..(j + 1) * n];
            let s: f64 = (j + 1..n).map(|i| col[i] * w[i]).sum();
            w[j] = (w[j] - s) / col[j];
        }
    }

    /// Posterior mean and variance without the weight decomposition.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_query(x)?;
        let mut v = self.cross_cov(x);
        let mean: f64 = v.iter().zip(self.alpha.iter()).map(|(k, a)| k * a).sum();
        self.forward_solve(&mut v);
        let prior = self.params.signal_variance;
        let red = v.iter().map(|t| t * t).sum::<f64>().min(prior);
        Ok((mean, prior - red))
    }

    pub fn posterior(&self, x: &[f64]) -> Result<Posterior> {
        self.check_query(x)?;
        let kstar = self.cross_cov(x);
        let mean: f64 = kstar.iter().zip(self.alpha.iter()).map(|(k, a)| k * a).sum();
        let mut v = kstar;
        self.forward_solve(&mut v);
        let prior_var = self.params.signal_variance;
        let var_reduction = v.iter().map(|t| t * t).sum::<f64>().min(prior_var);
        let mut weights = v;
        self.backward_solve(&mut weights);
        Ok(Posterior {
            mean,
            std: (prior_var - var_reduction).sqrt(),
            weights,
            prior_var,
            var_reduction,
        })
    }
}

/// Symmetric `1 - alpha_level` interval `mean -/+ q * std`.
pub fn confidence_interval(p: &Posterior, alpha_level: f64) -> Result<(f64, f64)> {
    if !(alpha_level > 0.0 && alpha_level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha_level must lie in (0, 1), got {alpha_level}"
        )));
    }
    let q = normal_quantile(1.0 - alpha_level / 2.0);
    Ok((p.mean - q * p.std, p.mean + q * p.std))
}
