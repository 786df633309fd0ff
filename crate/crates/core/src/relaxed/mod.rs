//! Speed-unconstrained planners.
//!
//! Without a speed limit the UAV can jump between locations, so a plan is a
//! set of hover points with durations and per-point sensor powers. Both the
//! rate and the outage problems are solved through their Lagrange duals: the
//! inner problem at a fixed location has a closed form, locations come from
//! an exhaustive grid search, the dual variables from the ellipsoid method,
//! and hover durations from a small time-sharing linear program.

mod grid;
mod outage;
mod rate;

use std::io::{Read, Write};

use serde::Serialize;

use crate::convex::{solve_lp, LinearProgram, LpRow, SolveConfig};
use crate::model::{rate_from_snr, snr, Mode, ModelError, Point, PowerVector, Scenario, POWER_SLACK_W};
use crate::PlanError;

pub use grid::LocationGrid;
pub use outage::{
    outage_dual_solve, outage_inner_power, outage_location_search, outage_scale_bisection, outage_timeshare,
    solve_p21, OutageCase,
};
pub use rate::{rate_dual_solve, rate_inner_power, rate_location_search, rate_timeshare, solve_p11};

/// Lagrange multipliers of the average-power constraints, one per sensor.
///
/// Sensors with a zero budget carry `+∞`: their power is then forced to zero
/// by the closed-form inner solutions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualVars(Vec<f64>);

impl DualVars {
    /// Floors every finite entry at `floor`.
    pub fn new(values: Vec<f64>, floor: f64) -> Self {
        Self(values.into_iter().map(|v| if v.is_nan() { floor } else { v.max(floor) }).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `Σ_k v_k·x_k` over finite multipliers.
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).filter(|(v, _)| v.is_finite()).map(|(v, x)| v * x).sum()
    }
}

/// Optimal inner solution at one location.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerSolution {
    pub location: Point,
    pub powers: PowerVector,
    /// Total "effective" power of the water-filling solution; zero in outage mode.
    pub p_total_tilde: f64,
    pub inner_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoverPoint {
    pub location: Point,
    pub duration: f64,
    pub powers: PowerVector,
}

/// Primal solution of a relaxed problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoverPlan {
    pub mode: Mode,
    pub horizon: f64,
    pub points: Vec<HoverPoint>,
    /// Time spent in outage with all sensors silent; zero in rate mode.
    pub outage_duration: f64,
    /// Average rate (bps/Hz) or outage probability.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSolveReport {
    pub mode: Mode,
    pub dual_point: DualVars,
    pub dual_value: f64,
    pub iterations: usize,
    pub subgradient_norm_history: Vec<f64>,
    pub converged: bool,
    /// Certified bound on the distance from the dual optimum.
    pub gap: f64,
    /// Outage mode only: which branch of the inner problem wins at the optimum.
    pub case: Option<OutageCase>,
}

impl DualSolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Relative slack on the SNR threshold check of hover points.
const SNR_CHECK_REL: f64 = 1e-9;

impl HoverPlan {
    /// Time-averaged power of sensor `k`.
    pub fn average_power(&self, k: usize) -> f64 {
        self.points.iter().map(|p| p.duration * p.powers.as_slice()[k]).sum::<f64>() / self.horizon
    }

    /// Objective recomputed from the points.
    pub fn evaluate(&self, scn: &Scenario) -> Result<f64, ModelError> {
        match self.mode {
            Mode::Rate => Ok(self
                .points
                .iter()
                .map(|p| p.duration * rate_from_snr(snr(p.location, &p.powers, scn)))
                .sum::<f64>()
                / self.horizon),
            Mode::Outage => {
                let gamma = scn.require_gamma_min()?;
                let down: f64 = self
                    .points
                    .iter()
                    .filter(|p| snr(p.location, &p.powers, scn) < gamma * (1.0 - SNR_CHECK_REL))
                    .map(|p| p.duration)
                    .sum();
                Ok((self.outage_duration + down) / self.horizon)
            }
        }
    }

    /// Duration, budget and (outage mode) SNR-floor invariants.
    pub fn check(&self, scn: &Scenario, cfg: &SolveConfig) -> Result<(), ModelError> {
        let total: f64 = self.points.iter().map(|p| p.duration).sum::<f64>() + self.outage_duration;
        if (total - self.horizon).abs() > 1e-6 {
            return Err(ModelError::PlanViolation(format!("durations sum to {total} s, horizon {} s", self.horizon)));
        }
        if self.points.iter().any(|p| p.duration < 0.0) || self.outage_duration < 0.0 {
            return Err(ModelError::PlanViolation("negative duration".into()));
        }
        for (k, s) in scn.sensors().iter().enumerate() {
            let avg = self.average_power(k);
            if avg > s.p_avg + POWER_SLACK_W {
                return Err(ModelError::PlanViolation(format!(
                    "average power of sensor {k}: {avg} W > budget {} W",
                    s.p_avg
                )));
            }
        }
        if self.mode == Mode::Outage {
            let gamma = scn.require_gamma_min()?;
            for p in self.points.iter().filter(|p| p.duration > 0.0) {
                let s = snr(p.location, &p.powers, scn);
                if s < gamma * (1.0 - SNR_CHECK_REL) - cfg.tol_feas {
                    return Err(ModelError::PlanViolation(format!(
                        "SNR {s} below threshold {gamma} at ({}, {})",
                        p.location.x, p.location.y
                    )));
                }
            }
        }
        Ok(())
    }

    /// Writes `x_m,y_m,duration_s,p1_w..pK_w` rows. Outage plans end with a
    /// row carrying only the outage duration.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PlanError> {
        let k = self.points.first().map_or(0, |p| p.powers.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x_m".to_string(), "y_m".into(), "duration_s".into()];
        header.extend((1..=k).map(|i| format!("p{i}_w")));
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![p.location.x.to_string(), p.location.y.to_string(), p.duration.to_string()];
            row.extend(p.powers.as_slice().iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        if self.mode == Mode::Outage {
            let mut row = vec![String::new(), String::new(), self.outage_duration.to_string()];
            row.extend(std::iter::repeat_n(String::new(), k));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a file produced by [`HoverPlan::write_csv`]; the objective is
    /// recomputed from the scenario.
    pub fn read_csv<R: Read>(input: R, mode: Mode, scn: &Scenario) -> Result<Self, PlanError> {
        let mut r = csv::Reader::from_reader(input);
        let mut points = Vec::new();
        let mut outage_duration = 0.0;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| PlanError::Io(format!("bad number `{s}`: {e}")));
        for rec in r.records() {
            let rec = rec?;
            if rec.len() < 3 {
                return Err(PlanError::Io("hover plan row has fewer than 3 columns".into()));
            }
            if rec[0].trim().is_empty() {
                outage_duration = parse(&rec[2])?;
                continue;
            }
            let powers = (3..rec.len()).map(|i| parse(&rec[i])).collect::<Result<Vec<_>, _>>()?;
            if powers.len() != scn.num_sensors() {
                return Err(PlanError::Io("hover plan has the wrong number of power columns".into()));
            }
            points.push(HoverPoint {
                location: Point::new(parse(&rec[0])?, parse(&rec[1])?),
                duration: parse(&rec[2])?,
                powers: PowerVector::from_clamped(powers),
            });
        }
        let mut plan = HoverPlan { mode, horizon: scn.horizon(), points, outage_duration, objective: 0.0 };
        plan.objective = plan.evaluate(scn)?;
        Ok(plan)
    }
}

/// Time-sharing LP over candidate hover points in fractions of the horizon.
///
/// With `weights = Some(r)` it maximizes `Σθ_ν r_ν`; with `None` it
/// maximizes the served fraction `Σθ_ν`. Constraints are the average-power
/// budgets and `Σθ ≤ 1`.
fn timeshare_fractions(
    candidates: &[InnerSolution],
    budgets: &[f64],
    weights: Option<&[f64]>,
    cfg: &SolveConfig,
) -> Result<Vec<f64>, PlanError> {
    let v = candidates.len();
    let objective = match weights {
        Some(r) => r.to_vec(),
        None => vec![1.0; v],
    };
    let mut lp = LinearProgram::maximize(objective);
    for (k, &b) in budgets.iter().enumerate() {
        lp = lp.row(LpRow::le(candidates.iter().map(|c| c.powers.as_slice()[k]).collect(), b));
    }
    lp = lp.row(LpRow::le(vec![1.0; v], 1.0));
    let sol = solve_lp(&lp, cfg)?;
    Ok(sol.x.into_iter().map(|t| t.clamp(0.0, 1.0)).collect())
}

/// Sensors with a positive budget.
fn active_sensors(scn: &Scenario) -> Vec<usize> {
    (0..scn.num_sensors()).filter(|&k| scn.sensors()[k].p_avg > 0.0).collect()
}

/// Spreads the active coordinates `x` into a full-length multiplier vector,
/// putting `+∞` on silent sensors.
fn expand_duals(x: &[f64], active: &[usize], k: usize, floor: f64) -> DualVars {
    let mut v = vec![f64::INFINITY; k];
    for (&i, &xi) in active.iter().zip(x) {
        v[i] = xi;
    }
    DualVars::new(v, floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_floor_applies() {
        let d = DualVars::new(vec![-1.0, 0.5, f64::INFINITY], 1e-8);
        assert_eq!(d.as_slice(), &[1e-8, 0.5, f64::INFINITY]);
        assert_eq!(d.dot(&[1.0, 2.0, 0.0]), 1e-8 + 1.0);
    }
}
