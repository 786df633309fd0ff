//! Planner dispatch, parameter sweeps and a brute-force reference solver for
//! the `beamtraj` command-line tool.

pub mod oracle;
pub mod run;
pub mod sweep;

use std::fmt;
use std::str::FromStr;

use beamtraj::sca::FiniteSolver;
use beamtraj::{ModelError, PlanError, SolveConfig};
use serde::Serialize;
use thiserror::Error;

pub use oracle::{brute_force_oracle, OracleError, OracleGrid};
pub use run::{run, RunRequest, RunSummary};
pub use sweep::{sweep, write_sweep_csv, SweepParam, SweepRow, SweepSpec};

/// Environment variable holding the sweep worker count.
pub const WORKERS_ENV: &str = "BEAMTRAJ_WORKERS";

/// Every planner the tool can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Solver {
    Relaxed,
    Finite(FiniteSolver),
}

impl Solver {
    pub fn label(self) -> &'static str {
        match self {
            Solver::Relaxed => "relaxed",
            Solver::Finite(f) => f.label(),
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "relaxed" {
            Ok(Solver::Relaxed)
        } else {
            s.parse().map(Solver::Finite)
        }
    }
}

/// Command-line overrides of the default solver settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Overrides {
    pub grid_step: Option<f64>,
    pub slots: Option<usize>,
    pub tol: Option<f64>,
    pub max_rounds: Option<usize>,
}

impl Overrides {
    /// Default settings with the overrides applied and validated.
    pub fn config(&self) -> Result<SolveConfig, RunError> {
        let mut cfg = SolveConfig::default();
        if let Some(v) = self.grid_step {
            cfg.grid_step_m = v;
        }
        if let Some(v) = self.slots {
            cfg.n_slots = v;
        }
        if let Some(v) = self.tol {
            cfg.tol_obj = v;
        }
        if let Some(v) = self.max_rounds {
            cfg.sca_max_rounds = v;
        }
        cfg.validate().map_err(|e| RunError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    /// Bad scenario file, flags or settings. Nothing is written.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(PlanError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    /// Machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Solver(_) => "solver",
            RunError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) => 3,
            RunError::Io(_) => 4,
        }
    }
}

impl From<PlanError> for RunError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Model(m @ ModelError::PlanViolation(_)) => RunError::Solver(PlanError::Model(m)),
            PlanError::Model(m) => RunError::Config(m.to_string()),
            PlanError::Io(s) => RunError::Io(s),
            other => RunError::Solver(other),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}
