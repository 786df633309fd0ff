//! Small dense solvers shared by the planners.
//!
//! * [`lp`]: two-phase simplex with Bland's anti-cycling rule.
//! * [`smooth`]: log-barrier path following for concave maximization.
//! * [`ellipsoid`]: central-cut ellipsoid method driven by subgradients.
//! * [`bisect`]: monotone bisection on reals and integers.

pub mod bisect;
pub mod ellipsoid;
mod linalg;
pub mod lp;
pub mod smooth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bisect::{bisect, bisect_bracket, largest_feasible, Bracket};
pub use ellipsoid::{ellipsoid_optimize, EllipsoidResult, EllipsoidState, EllipsoidStep};
pub use lp::{solve_lp, LinearProgram, LpRow, LpSolution, Sense};
pub use smooth::{find_strictly_feasible, maximize_smooth, LocalModel, SmoothFn, SmoothProgram, SmoothSolution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("iteration limit reached ({0} iterations)")]
    IterationLimit(usize),
    #[error("no strictly feasible starting point (best minimum slack {0:e})")]
    NoStrictlyFeasibleStart(f64),
    #[error("predicate has the same value at both ends of the bracket")]
    NoSignChange,
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Tolerances and iteration caps used by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Relative objective tolerance (barrier duality gap, ellipsoid gap).
    pub tol_obj: f64,
    /// Constraint tolerance; also the strict-feasibility margin sought by
    /// the feasibility phase.
    pub tol_feas: f64,
    /// Iteration cap for the ellipsoid method; `None` means `500·m²`.
    pub max_iters: Option<usize>,
    /// Resolution of the 2D location grid in meters.
    pub grid_step_m: f64,
    /// Floor applied to every dual variable.
    pub dual_floor: f64,
    /// Certified relative gap at which the dual ellipsoid stops.
    pub dual_tol: f64,
    /// Grid nodes within this much of the best inner value count as ties.
    pub tie_tol: f64,
    /// Acceptable |primal − dual| for the relaxed problems.
    pub duality_gap_tol: f64,
    /// Outage probability regarded as "slightly above zero" when scaling budgets.
    pub kappa_tol: f64,
    /// Bisection tolerance on the budget-scaling factor.
    pub kappa_step_tol: f64,
    /// Relative improvement below which SCA stops.
    pub sca_tol: f64,
    pub sca_max_rounds: usize,
    /// Number of time slots of finite-horizon plans.
    pub n_slots: usize,
    /// Above this many hover points the tour falls back to a heuristic.
    pub tsp_exhaustive_limit: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tol_obj: 1e-6,
            tol_feas: 1e-9,
            max_iters: None,
            grid_step_m: 1.0,
            dual_floor: 1e-8,
            dual_tol: 1e-9,
            tie_tol: 1e-6,
            duality_gap_tol: 1e-2,
            kappa_tol: 1e-3,
            kappa_step_tol: 1e-4,
            sca_tol: 1e-4,
            sca_max_rounds: 50,
            n_slots: 128,
            tsp_exhaustive_limit: 8,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("tol_obj", self.tol_obj),
            ("tol_feas", self.tol_feas),
            ("grid_step_m", self.grid_step_m),
            ("dual_floor", self.dual_floor),
            ("dual_tol", self.dual_tol),
            ("tie_tol", self.tie_tol),
            ("duality_gap_tol", self.duality_gap_tol),
            ("kappa_tol", self.kappa_tol),
            ("kappa_step_tol", self.kappa_step_tol),
            ("sca_tol", self.sca_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::Malformed(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == Some(0) {
            return Err(SolverError::Malformed("max_iters must be at least 1".into()));
        }
        if self.sca_max_rounds == 0 || self.n_slots == 0 {
            return Err(SolverError::Malformed("sca_max_rounds and n_slots must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn ellipsoid_iters(&self, dim: usize) -> usize {
        self.max_iters.unwrap_or(500 * dim.max(1) * dim.max(1))
    }
}
