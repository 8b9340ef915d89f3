//! Independent oracles, invariant monitors and the synthetic instance
//! generator.

mod checks;
mod generator;
mod monitor;

pub use checks::{
    eps_subdiff_check, finite_diff_grad_check, inclusion_residual, SubdiffCheck, DEFAULT_BOUNDARY_SAMPLES,
    DEFAULT_INTERIOR_SAMPLES,
};
pub use generator::{generate, GeneratorSpec, HSpec};
pub use monitor::{monitor, MonitorEntry, MonitorReport, MonitorStatus};
