//! Trajectory and power planning for a UAV collecting data from ground
//! sensors that beamform coherently toward it.
//!
//! * [`model`]: scenario, channel, SNR/rate/outage metrics and discrete plans.
//! * [`convex`]: the small solvers everything else is built on.
//! * [`relaxed`]: speed-unconstrained planners solved by Lagrange duality.
//! * [`sca`]: finite-horizon planners based on successive convex approximation.

pub mod convex;
pub mod model;
pub mod presets;
pub mod relaxed;
pub mod sca;

use thiserror::Error;

pub use convex::{SolveConfig, SolverError};
pub use model::{Mode, ModelError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for PlanError {
    fn from(e: std::io::Error) -> Self {
        PlanError::Io(e.to_string())
    }
}

impl From<csv::Error> for PlanError {
    fn from(e: csv::Error) -> Self {
        PlanError::Io(e.to_string())
    }
}
