//! Relaxed outage minimization.
//!
//! At every instant the UAV either accepts an outage (cost 1, sensors
//! silent) or meets the SNR threshold with the cheapest powers. The dual
//! function is `g̃(μ) = min(1, min_q Σ μ_k P_k(μ, q)) − Σ μ_k P_k^ave`.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use log::{debug, warn};
use serde::Serialize;

use super::grid::LocationGrid;
use super::{active_sensors, expand_duals, timeshare_fractions, DualSolveReport, DualVars, HoverPlan, HoverPoint, InnerSolution};
use crate::convex::{bisect_bracket, ellipsoid_optimize, SolveConfig};
use crate::model::{Mode, Point, PowerVector, Scenario};
use crate::PlanError;

/// Which branch of the inner problem is cheaper at the best location.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutageCase {
    NonOutageCheaper,
    Tie,
    OutageCheaper,
}

/// `Σ h_k²/μ_k` over sensors with finite multipliers.
fn weighted_gain(mu: &[f64], gains: &[f64]) -> f64 {
    gains.iter().zip(mu).filter(|(_, m)| m.is_finite()).map(|(g, m)| g / m).sum()
}

/// Cheapest powers meeting SNR = γ exactly, and their weighted cost
/// `Σ μ_k P_k = γσ²/C`.
fn min_cost_powers(mu: &[f64], gains: &[f64], gamma_sigma2: f64) -> (Vec<f64>, f64) {
    let c = weighted_gain(mu, gains);
    if c <= 0.0 {
        return (vec![0.0; gains.len()], f64::INFINITY);
    }
    let powers = gains
        .iter()
        .zip(mu)
        .map(|(g, m)| if m.is_finite() { gamma_sigma2 * g / (c * c * m * m) } else { 0.0 })
        .collect();
    (powers, gamma_sigma2 / c)
}

fn classify(value: f64, tie_tol: f64) -> OutageCase {
    if (value - 1.0).abs() <= tie_tol {
        OutageCase::Tie
    } else if value < 1.0 {
        OutageCase::NonOutageCheaper
    } else {
        OutageCase::OutageCheaper
    }
}

/// Minimum-cost powers at `q` that meet the SNR threshold with equality.
pub fn outage_inner_power(mu: &DualVars, q: Point, scn: &Scenario) -> Result<InnerSolution, PlanError> {
    let gamma = scn.require_gamma_min()?;
    let gains: Vec<f64> = (0..scn.num_sensors()).map(|k| scn.channel_gain(q, k)).collect();
    let (powers, value) = min_cost_powers(mu.as_slice(), &gains, gamma * scn.channel().sigma2);
    Ok(InnerSolution { location: q, powers: PowerVector::from_clamped(powers), p_total_tilde: 0.0, inner_value: value })
}

fn location_search_on(
    grid: &LocationGrid,
    mu: &DualVars,
    scn: &Scenario,
    cfg: &SolveConfig,
) -> Result<(Vec<InnerSolution>, OutageCase), PlanError> {
    let gs2 = scn.require_gamma_min()? * scn.channel().sigma2;
    let m = mu.as_slice();
    let ties = grid.clustered_maximizers(|g| -min_cost_powers(m, g, gs2).1, cfg.tie_tol);
    let sols: Vec<InnerSolution> = ties
        .into_iter()
        .map(|(i, _)| {
            let (powers, value) = min_cost_powers(m, grid.gains(i), gs2);
            InnerSolution { location: grid.point(i), powers: PowerVector::from_clamped(powers), p_total_tilde: 0.0, inner_value: value }
        })
        .collect();
    let best = sols.iter().map(|s| s.inner_value).fold(f64::INFINITY, f64::min);
    Ok((sols, classify(best, cfg.tie_tol)))
}

/// Clustered grid minimizers of the inner cost and the winning branch.
pub fn outage_location_search(
    mu: &DualVars,
    scn: &Scenario,
    cfg: &SolveConfig,
) -> Result<(Vec<InnerSolution>, OutageCase), PlanError> {
    location_search_on(&LocationGrid::new(scn, cfg.grid_step_m), mu, scn, cfg)
}

fn dual_solve_on(grid: &LocationGrid, scn: &Scenario, cfg: &SolveConfig) -> Result<DualSolveReport, PlanError> {
    cfg.validate()?;
    let gs2 = scn.require_gamma_min()? * scn.channel().sigma2;
    let k = scn.num_sensors();
    let active = active_sensors(scn);
    let budgets = scn.budgets();
    let mut report = if active.is_empty() {
        DualSolveReport {
            mode: Mode::Outage,
            dual_point: DualVars::new(vec![f64::INFINITY; k], cfg.dual_floor),
            dual_value: 1.0,
            iterations: 0,
            subgradient_norm_history: Vec::new(),
            converged: true,
            gap: 0.0,
            case: Some(OutageCase::OutageCheaper),
        }
    } else {
        // Minimizes −g̃(μ).
        let oracle = |x: &[f64]| {
            let mu = expand_duals(x, &active, k, cfg.dual_floor);
            let m = mu.as_slice();
            let (i, _) = grid.argmax(|g| weighted_gain(m, g));
            let (powers, value) = min_cost_powers(m, grid.gains(i), gs2);
            let served = value < 1.0;
            let neg_dual = mu.dot(&budgets) - value.min(1.0);
            let sub: Vec<f64> = active.iter().map(|&s| budgets[s] - if served { powers[s] } else { 0.0 }).collect();
            (neg_dual, sub)
        };
        let x0: Vec<f64> = active.iter().map(|&s| 1.0 / (LN_2 * budgets[s])).collect();
        let far: f64 = active.iter().zip(&x0).map(|(&s, m0)| (m0 + 1.0 / budgets[s]).powi(2)).sum::<f64>().sqrt();
        let r0 = (10.0 * x0.iter().copied().fold(0.0, f64::max)).max(far);
        let ecfg = SolveConfig { tol_obj: cfg.dual_tol, ..cfg.clone() };
        let lower = vec![cfg.dual_floor; active.len()];
        let res = ellipsoid_optimize(oracle, &x0, r0, &lower, &ecfg)?;
        if !res.converged {
            warn!("outage dual stopped after {} iterations with gap {:.3e}", res.iterations, res.gap);
        }
        debug!("outage dual: g = {:.9} after {} iterations", -res.value, res.iterations);
        DualSolveReport {
            mode: Mode::Outage,
            dual_point: expand_duals(&res.x, &active, k, cfg.dual_floor),
            dual_value: -res.value,
            iterations: res.iterations,
            subgradient_norm_history: res.history.iter().map(|h| h.subgradient_norm).collect(),
            converged: res.converged,
            gap: res.gap,
            case: None,
        }
    };
    if report.case.is_none() {
        let m = report.dual_point.as_slice();
        let (i, _) = grid.argmax(|g| weighted_gain(m, g));
        report.case = Some(classify(min_cost_powers(m, grid.gains(i), gs2).1, cfg.tie_tol));
    }
    Ok(report)
}

/// Maximizes the dual function `g̃(μ)` with the ellipsoid method.
pub fn outage_dual_solve(scn: &Scenario, cfg: &SolveConfig) -> Result<DualSolveReport, PlanError> {
    dual_solve_on(&LocationGrid::new(scn, cfg.grid_step_m), scn, cfg)
}

/// Hover durations maximizing the served time over `candidates`; the rest
/// of the horizon is spent in outage with all sensors silent.
pub fn outage_timeshare(candidates: &[InnerSolution], scn: &Scenario, cfg: &SolveConfig) -> Result<HoverPlan, PlanError> {
    let t = scn.horizon();
    let theta = if candidates.is_empty() {
        Vec::new()
    } else {
        timeshare_fractions(candidates, &scn.budgets(), None, cfg)?
    };
    let served: f64 = theta.iter().sum::<f64>().min(1.0);
    let points = candidates
        .iter()
        .zip(&theta)
        .map(|(c, th)| HoverPoint { location: c.location, duration: th * t, powers: c.powers.clone() })
        .collect();
    let mut plan = HoverPlan { mode: Mode::Outage, horizon: t, points, outage_duration: t * (1.0 - served), objective: 0.0 };
    plan.objective = plan.evaluate(scn)?;
    Ok(plan)
}

struct ScaledSolve {
    candidates: Vec<InnerSolution>,
    outage: f64,
}

fn solve_scaled(grid: &LocationGrid, scn: &Scenario, kappa: f64, cfg: &SolveConfig) -> Result<ScaledSolve, PlanError> {
    let scaled = scn.with_scaled_budgets(kappa);
    let report = dual_solve_on(grid, &scaled, cfg)?;
    let (candidates, case) = location_search_on(grid, &report.dual_point, &scaled, cfg)?;
    let outage = match case {
        OutageCase::Tie => outage_timeshare(&candidates, &scaled, cfg)?.objective,
        OutageCase::NonOutageCheaper => 0.0,
        OutageCase::OutageCheaper => 1.0,
    };
    Ok(ScaledSolve { candidates, outage })
}

/// Smallest budget scale considered by the bisection.
const KAPPA_MIN: f64 = 1e-6;
/// Outage probabilities at or below this count as zero.
const ZERO_OUTAGE: f64 = 1e-9;

fn scale_bisection_on(grid: &LocationGrid, scn: &Scenario, cfg: &SolveConfig) -> Result<HoverPlan, PlanError> {
    let full = solve_scaled(grid, scn, 1.0, cfg)?;
    if full.outage > ZERO_OUTAGE {
        // Already at (or past) the threshold with the real budgets.
        return outage_timeshare(&full.candidates, scn, cfg);
    }
    let mut cache: HashMap<u64, ScaledSolve> = HashMap::new();
    let mut failure = None;
    let mut pred = |kappa: f64| -> bool {
        if failure.is_some() {
            return false;
        }
        match solve_scaled(grid, scn, kappa, cfg) {
            Ok(s) => {
                let hit = s.outage > ZERO_OUTAGE;
                cache.insert(kappa.to_bits(), s);
                hit
            }
            Err(e) => {
                failure = Some(e);
                false
            }
        }
    };
    let candidates = match bisect_bracket(&mut pred, KAPPA_MIN, 1.0, cfg.kappa_step_tol) {
        Ok(b) => {
            if let Some(e) = failure {
                return Err(e);
            }
            let lo = cache.remove(&b.lo.to_bits()).expect("bisection evaluated its bracket");
            debug!("budget scale threshold in [{:.6}, {:.6}], outage at lower end {:.3e}", b.lo, b.hi, lo.outage);
            if lo.outage > cfg.kappa_tol {
                warn!("outage {:.3e} at the bisection's lower end exceeds kappa_tol", lo.outage);
            }
            lo.candidates
        }
        Err(_) => {
            if let Some(e) = failure {
                return Err(e);
            }
            warn!("no outage even at budget scale {KAPPA_MIN:e}; using that solve's hover points");
            cache.remove(&KAPPA_MIN.to_bits()).expect("endpoint evaluated").candidates
        }
    };
    outage_timeshare(&candidates, scn, cfg)
}

/// Non-outage case: scales all budgets by κ until outage just appears, then
/// serves the whole horizon from that solve's hover points with the real
/// budgets.
pub fn outage_scale_bisection(scn: &Scenario, cfg: &SolveConfig) -> Result<HoverPlan, PlanError> {
    scale_bisection_on(&LocationGrid::new(scn, cfg.grid_step_m), scn, cfg)
}

/// Full relaxed outage pipeline.
pub fn solve_p21(scn: &Scenario, cfg: &SolveConfig) -> Result<(HoverPlan, DualSolveReport), PlanError> {
    let grid = LocationGrid::new(scn, cfg.grid_step_m);
    let report = dual_solve_on(&grid, scn, cfg)?;
    let plan = match report.case {
        Some(OutageCase::Tie) => {
            let (candidates, _) = location_search_on(&grid, &report.dual_point, scn, cfg)?;
            let mut plan = outage_timeshare(&candidates, scn, cfg)?;
            let horizon = plan.horizon;
            plan.points.retain(|p| p.duration > 1e-12 * horizon);
            let gap = plan.objective - report.dual_value;
            if gap.abs() > cfg.duality_gap_tol {
                warn!("relaxed outage duality gap {gap:.3e} exceeds {:.1e}", cfg.duality_gap_tol);
            }
            plan
        }
        Some(OutageCase::NonOutageCheaper) => {
            let mut plan = scale_bisection_on(&grid, scn, cfg)?;
            let horizon = plan.horizon;
            plan.points.retain(|p| p.duration > 1e-12 * horizon);
            plan
        }
        _ => HoverPlan { mode: Mode::Outage, horizon: scn.horizon(), points: Vec::new(), outage_duration: scn.horizon(), objective: 1.0 },
    };
    plan.check(scn, cfg)?;
    Ok((plan, report))
}
