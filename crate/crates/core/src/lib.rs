//! Gaussian-process surrogate certification of a grid congestion controller.
//!
//! A GP trained on simulated scenarios replaces the grid simulator whenever
//! its (residual-inflated) uncertainty allows a confident congestion verdict,
//! so a controller's failure probability can be estimated with a fraction of
//! the simulations.
//!
//! Modules:
//! - [`gp`]: exact GP regression, hyperparameter fitting, posterior decomposition.
//! - [`uq`]: residual-uncertainty schedule and the keep/simulate rule.
//! - [`grid`]: DC transfer factors, curtailment LP and the ground-truth simulator.
//! - [`certification`]: the sequential workflow and its audit.
//! - [`baselines`]: LHS and straddle-acquisition fixed-budget strategies.
//! - [`figures`]: data behind the univariate illustrations.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod certification;
pub mod error;
pub mod exec;
pub mod figures;
pub mod gp;
pub mod grid;
pub mod report;
pub mod seeds;
pub mod stats;
pub mod uq;

pub use error::{Error, Result};
pub use exec::Exec;
