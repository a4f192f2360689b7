//! Exact Gaussian-process regression with a squared-exponential ARD kernel.
//!
//! Predictions expose the interpretable decomposition of the posterior: the
//! mean is a weighted sum of the observed outputs and the variance is the prior
//! variance minus a reduction term contributed by the data.

mod dataset;
mod kernel;
mod model;
mod optimize;

pub use dataset::Dataset;
pub use kernel::{kernel_eval, KernelParams};
pub use model::{
    confidence_interval, fit, log_marginal_likelihood, log_marginal_likelihood_grad, FitConfig,
    GpModel, Posterior, RefitPolicy, JITTER_LADDER,
};
pub use optimize::minimize_box;
