use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the squared-exponential ARD kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(signal_variance: f64, lengthscales: Vec<f64>, noise_variance: f64) -> Result<Self> {
        let p = KernelParams {
            signal_variance,
            lengthscales,
            noise_variance,
        };
        p.validate()?;
        Ok(p)
    }

    /// Isotropic parameters for `dim` inputs.
    pub fn isotropic(dim: usize, signal_variance: f64, lengthscale: f64, noise_variance: f64) -> Result<Self> {
        Self::new(signal_variance, vec![lengthscale; dim], noise_variance)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "signal_variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if let Some(l) = self.lengthscales.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!("lengthscale must be positive, got {l}")));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise_variance must be non-negative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    /// Squared distance scaled by the lengthscales. No dimension checks.
    #[inline]
    pub(crate) fn scaled_sq_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| {
                let t = (x - y) / l;
                t * t
            })
            .sum()
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        self.signal_variance * (-0.5 * self.scaled_sq_dist(a, b)).exp()
    }
}

/// `signal_variance * exp(-0.5 * sum(((x1_i - x2_i) / l_i)^2))`.
pub fn kernel_eval(x1: &[f64], x2: &[f64], params: &KernelParams) -> Result<f64> {
    let d = params.dim();
    for x in [x1, x2] {
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
    }
    Ok(params.eval_unchecked(x1, x2))
}
