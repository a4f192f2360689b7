//! Ground-truth grid simulator: DC power-transfer factors, the curtailment
//! LP that emulates the MPC controller, and the small analytic toys.

mod lp;
mod ptdf;
mod sim;
mod zone;

pub use lp::{mpc_curtailment, Curtailment, LpStatus};
pub use ptdf::ptdf_from_topology;
pub use sim::{
    sample_scenario, scenario_stream, simulate, toy_bivariate, toy_univariate, Scenario, SimResult,
};
pub use zone::{Line, LineConfig, ResUnit, ResUnitConfig, Zone, ZoneConfig};
