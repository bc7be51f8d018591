//! Metrics, the linear baseline and parameter sweeps.

mod linear;
mod metrics;
mod sweep;

pub use linear::{fit_linear, LinearModel, DEFAULT_RIDGE};
pub use metrics::{average_ranks, mae, mse, spearman_rho, spearman_rho_checked, EvalReport};
pub use sweep::{
    sweep, sweep_k, sweep_ty, SweepEntry, SweepParam, SweepResult, TrainTest, DEFAULT_K_GRID,
    DEFAULT_TY_GRID,
};
