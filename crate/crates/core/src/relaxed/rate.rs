//! Relaxed rate maximization.

use std::f64::consts::LN_2;

use log::{debug, warn};

use super::grid::LocationGrid;
use super::{active_sensors, expand_duals, timeshare_fractions, DualSolveReport, DualVars, HoverPlan, HoverPoint, InnerSolution};
use crate::convex::{ellipsoid_optimize, SolveConfig};
use crate::model::{rate_from_snr, snr, Mode, Point, PowerVector, Scenario};
use crate::PlanError;

/// Water-filling solution for channel power gains `gains` (`h_k²`).
///
/// Returns `(P̃, powers, inner value)` where the inner value is
/// `log2(1 + SNR) − Σ λ_k P_k`.
pub(crate) fn water_fill(lambda: &[f64], gains: &[f64], sigma2: f64) -> (f64, Vec<f64>, f64) {
    let hbh = weighted_gain(lambda, gains);
    if hbh <= 0.0 {
        return (0.0, vec![0.0; gains.len()], 0.0);
    }
    let pt = (1.0 / LN_2 - sigma2 / hbh).max(0.0);
    let powers = gains
        .iter()
        .zip(lambda)
        .map(|(g, l)| if l.is_finite() { pt * g / (l * l * hbh) } else { 0.0 })
        .collect();
    (pt, powers, inner_value(pt, hbh, sigma2))
}

/// `Σ h_k²/λ_k`; the inner value is nondecreasing in it.
fn weighted_gain(lambda: &[f64], gains: &[f64]) -> f64 {
    gains.iter().zip(lambda).filter(|(_, l)| l.is_finite()).map(|(g, l)| g / l).sum()
}

fn inner_value(pt: f64, hbh: f64, sigma2: f64) -> f64 {
    (pt * hbh / sigma2).ln_1p() / LN_2 - pt
}

fn gains_at(q: Point, scn: &Scenario) -> Vec<f64> {
    (0..scn.num_sensors()).map(|k| scn.channel_gain(q, k)).collect()
}

/// Optimal powers at a fixed location for multipliers `lambda`.
pub fn rate_inner_power(lambda: &DualVars, q: Point, scn: &Scenario) -> InnerSolution {
    let (pt, powers, value) = water_fill(lambda.as_slice(), &gains_at(q, scn), scn.channel().sigma2);
    InnerSolution { location: q, powers: PowerVector::from_clamped(powers), p_total_tilde: pt, inner_value: value }
}

fn location_search_on(grid: &LocationGrid, lambda: &DualVars, scn: &Scenario, cfg: &SolveConfig) -> Vec<InnerSolution> {
    let l = lambda.as_slice();
    let s2 = scn.channel().sigma2;
    let value = |g: &[f64]| {
        let hbh = weighted_gain(l, g);
        if hbh <= 0.0 {
            return 0.0;
        }
        inner_value((1.0 / LN_2 - s2 / hbh).max(0.0), hbh, s2)
    };
    grid.clustered_maximizers(value, cfg.tie_tol)
        .into_iter()
        .map(|(i, _)| {
            let (pt, powers, v) = water_fill(l, grid.gains(i), s2);
            InnerSolution { location: grid.point(i), powers: PowerVector::from_clamped(powers), p_total_tilde: pt, inner_value: v }
        })
        .collect()
}

/// All clustered grid maximizers of the inner problem.
pub fn rate_location_search(lambda: &DualVars, scn: &Scenario, cfg: &SolveConfig) -> Vec<InnerSolution> {
    location_search_on(&LocationGrid::new(scn, cfg.grid_step_m), lambda, scn, cfg)
}

pub(crate) fn dual_solve_on(grid: &LocationGrid, scn: &Scenario, cfg: &SolveConfig) -> Result<DualSolveReport, PlanError> {
    cfg.validate()?;
    let k = scn.num_sensors();
    let active = active_sensors(scn);
    let budgets = scn.budgets();
    let s2 = scn.channel().sigma2;
    if active.is_empty() {
        return Ok(DualSolveReport {
            mode: Mode::Rate,
            dual_point: DualVars::new(vec![f64::INFINITY; k], cfg.dual_floor),
            dual_value: 0.0,
            iterations: 0,
            subgradient_norm_history: Vec::new(),
            converged: true,
            gap: 0.0,
            case: None,
        });
    }
    let oracle = |x: &[f64]| {
        let lambda = expand_duals(x, &active, k, cfg.dual_floor);
        let l = lambda.as_slice();
        let (i, _) = grid.argmax(|g| weighted_gain(l, g));
        let (_, powers, value) = water_fill(l, grid.gains(i), s2);
        let dual = value + lambda.dot(&budgets);
        let sub: Vec<f64> = active.iter().map(|&s| budgets[s] - powers[s]).collect();
        (dual, sub)
    };
    let x0: Vec<f64> = active.iter().map(|&s| 1.0 / (LN_2 * budgets[s])).collect();
    let g0 = oracle(&x0).0;
    let far: f64 = active.iter().zip(&x0).map(|(&s, l0)| (l0 + g0 / budgets[s]).powi(2)).sum::<f64>().sqrt();
    let r0 = (10.0 * x0.iter().copied().fold(0.0, f64::max)).max(far);
    let ecfg = SolveConfig { tol_obj: cfg.dual_tol, ..cfg.clone() };
    let lower = vec![cfg.dual_floor; active.len()];
    let res = ellipsoid_optimize(oracle, &x0, r0, &lower, &ecfg)?;
    if !res.converged {
        warn!("rate dual stopped after {} iterations with gap {:.3e}", res.iterations, res.gap);
    }
    debug!("rate dual: g = {:.9} after {} iterations", res.value, res.iterations);
    Ok(DualSolveReport {
        mode: Mode::Rate,
        dual_point: expand_duals(&res.x, &active, k, cfg.dual_floor),
        dual_value: res.value,
        iterations: res.iterations,
        subgradient_norm_history: res.history.iter().map(|h| h.subgradient_norm).collect(),
        converged: res.converged,
        gap: res.gap,
        case: None,
    })
}

/// Minimizes the dual function `g(λ)` with the ellipsoid method.
pub fn rate_dual_solve(scn: &Scenario, cfg: &SolveConfig) -> Result<DualSolveReport, PlanError> {
    dual_solve_on(&LocationGrid::new(scn, cfg.grid_step_m), scn, cfg)
}

/// Hover durations maximizing the average rate over `candidates`.
///
/// Candidates are kept in order, including those that receive no time. If
/// the LP leaves part of the horizon unused, every duration is stretched and
/// every power scaled down by the used fraction, which keeps the energy and
/// can only raise the rate.
pub fn rate_timeshare(candidates: &[InnerSolution], scn: &Scenario, cfg: &SolveConfig) -> Result<HoverPlan, PlanError> {
    if candidates.is_empty() {
        return Err(PlanError::Model(crate::ModelError::Invalid("no candidate hover points".into())));
    }
    let t = scn.horizon();
    let rates: Vec<f64> = candidates.iter().map(|c| rate_from_snr(snr(c.location, &c.powers, scn))).collect();
    let theta = timeshare_fractions(candidates, &scn.budgets(), Some(&rates), cfg)?;
    let used: f64 = theta.iter().sum();
    let points: Vec<HoverPoint> = if used <= 1e-15 {
        candidates
            .iter()
            .enumerate()
            .map(|(i, c)| HoverPoint {
                location: c.location,
                duration: if i == 0 { t } else { 0.0 },
                powers: PowerVector::zeros(c.powers.len()),
            })
            .collect()
    } else {
        let stretch = if used < 1.0 - 1e-12 { used } else { 1.0 };
        candidates
            .iter()
            .zip(&theta)
            .map(|(c, th)| HoverPoint {
                location: c.location,
                duration: th / stretch * t,
                powers: c.powers.scaled(stretch),
            })
            .collect()
    };
    let mut plan = HoverPlan { mode: Mode::Rate, horizon: t, points, outage_duration: 0.0, objective: 0.0 };
    plan.objective = plan.evaluate(scn)?;
    Ok(plan)
}

/// Full relaxed rate pipeline: dual, location search at the optimum, LP.
pub fn solve_p11(scn: &Scenario, cfg: &SolveConfig) -> Result<(HoverPlan, DualSolveReport), PlanError> {
    let grid = LocationGrid::new(scn, cfg.grid_step_m);
    let report = dual_solve_on(&grid, scn, cfg)?;
    let candidates = location_search_on(&grid, &report.dual_point, scn, cfg);
    let mut plan = rate_timeshare(&candidates, scn, cfg)?;
    let horizon = plan.horizon;
    plan.points.retain(|p| p.duration > 1e-12 * horizon);
    plan.check(scn, cfg)?;
    let gap = report.dual_value - plan.objective;
    if gap.abs() > cfg.duality_gap_tol {
        warn!("relaxed rate duality gap {gap:.3e} exceeds {:.1e}", cfg.duality_gap_tol);
    }
    Ok((plan, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_threshold_everything_is_off() {
        // Σ h²/λ ≤ σ² ln 2 switches the sensors off.
        let (pt, p, v) = water_fill(&[1.0, 1.0], &[0.3e-9, 0.3e-9], 1e-9 * 1.0);
        assert_eq!(pt, 0.0);
        assert!(p.iter().all(|&x| x == 0.0));
        assert_eq!(v, 0.0);
    }

    #[test]
    fn single_sensor_collapses_to_scalar_water_filling() {
        let (lambda, g, s2) = (0.8, 2e-7, 1e-9);
        let (_, p, _) = water_fill(&[lambda], &[g], s2);
        let expect = (1.0 / LN_2 - lambda * s2 / g).max(0.0) / lambda;
        assert!((p[0] - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn silent_sensor_gets_no_power() {
        let (_, p, _) = water_fill(&[1.0, f64::INFINITY], &[1e-7, 1e-7], 1e-9);
        assert!(p[0] > 0.0);
        assert_eq!(p[1], 0.0);
    }
}
