//! Convexified trajectory and power subproblems.
//!
//! Work is done in SNR units: `c_k(q) = sqrt(β0 d_k(q)^(−α) / σ²)` so that
//! the slot SNR is `(Σ_k c_k sqrt(P_k))²`. The per-sensor amplitude
//! auxiliaries are eliminated: the squared-sum bound is increasing in them,
//! so at the optimum each equals its own upper bound.

use log::{debug, warn};
use serde::Serialize;

use super::bounds::ScaAuxiliary;
use crate::convex::{maximize_smooth, LocalModel, SmoothFn, SmoothProgram, SolveConfig, SolverError};
use crate::model::{evaluate_plan, DiscretePlan, Mode, Point, Scenario};
use crate::PlanError;

/// Result of one convexified subproblem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaStep {
    pub plan: DiscretePlan,
    pub aux: ScaAuxiliary,
    pub objective_before: f64,
    pub objective_after: f64,
    /// False when the candidate did not improve the true objective (or the
    /// subproblem could not be solved) and the input plan was kept.
    pub accepted: bool,
}

/// Objective the alternating scheme ascends: average rate, or in outage
/// mode the average of `min(SNR, γ)/γ`.
pub fn surrogate_objective(plan: &DiscretePlan, mode: Mode, scn: &Scenario) -> Result<f64, PlanError> {
    let m = evaluate_plan(plan, scn);
    match mode {
        Mode::Rate => Ok(m.avg_rate),
        Mode::Outage => {
            let g = scn.require_gamma_min()?;
            let n = m.per_slot_snr.len().max(1) as f64;
            Ok(m.per_slot_snr.iter().map(|s| s.min(g) / g).sum::<f64>() / n)
        }
    }
}

fn snr_coeff(q: Point, k: usize, scn: &Scenario) -> f64 {
    (scn.channel_gain(q, k) / scn.channel().sigma2).sqrt()
}

/// Strictly feasible starting value for a squared-sum auxiliary whose bound
/// at the start point is `bound`.
fn aux_start(bound: f64, cap: Option<f64>) -> f64 {
    let b = cap.map_or(bound, |c| bound.min(c));
    b - 1e-6 * (1.0 + b.abs())
}

fn objective_term(mode: Mode, n: usize, gamma: f64) -> impl Fn(f64) -> (f64, f64, f64) {
    let inv_n = 1.0 / n as f64;
    move |a: f64| match mode {
        Mode::Rate => {
            let l2 = std::f64::consts::LN_2;
            let v = inv_n * a.ln_1p() / l2;
            (v, inv_n / (l2 * (1.0 + a)), -inv_n / (l2 * (1.0 + a) * (1.0 + a)))
        }
        Mode::Outage => (inv_n * a / gamma, inv_n / gamma, 0.0),
    }
}

fn finish(
    plan: &DiscretePlan,
    candidate: Option<DiscretePlan>,
    mode: Mode,
    scn: &Scenario,
    before: f64,
) -> Result<ScaStep, PlanError> {
    if let Some(c) = candidate {
        if c.check(scn).is_ok() {
            let after = surrogate_objective(&c, mode, scn)?;
            if after >= before {
                return Ok(ScaStep { aux: ScaAuxiliary::at(&c, scn), plan: c, objective_before: before, objective_after: after, accepted: true });
            }
        } else {
            warn!("subproblem returned a plan that fails the invariants; keeping the local point");
        }
    }
    Ok(ScaStep { plan: plan.clone(), aux: ScaAuxiliary::at(plan, scn), objective_before: before, objective_after: before, accepted: false })
}

/// Errors after which the local point is simply kept.
fn recoverable(e: &SolverError) -> bool {
    matches!(e, SolverError::NoStrictlyFeasibleStart(_) | SolverError::Numerical(_))
}

/// Optimizes the waypoints with powers fixed.
pub fn traj_subproblem(plan: &DiscretePlan, mode: Mode, scn: &Scenario, cfg: &SolveConfig) -> Result<ScaStep, PlanError> {
    let before = surrogate_objective(plan, mode, scn)?;
    let n = plan.n_slots();
    let step = scn.v_max() * plan.slot_len;
    if n == 0 || !(step > 0.0) {
        return finish(plan, None, mode, scn, before);
    }
    let gamma = if mode == Mode::Outage { scn.require_gamma_min()? } else { f64::INFINITY };
    let ch = *scn.channel();
    let h2 = scn.altitude() * scn.altitude();
    let e = ch.alpha / 4.0;
    let sensors: Vec<Point> = scn.sensors().iter().map(|s| s.position).collect();

    // Layout: slots 0..n−1 carry [x, y, A]; the last slot only [A].
    let xi = |s: usize| 3 * s;
    let ai = |s: usize| if s + 1 < n { 3 * s + 2 } else { 3 * (n - 1) };
    let dim = 3 * (n - 1) + 1;

    let mut x0 = vec![0.0; dim];
    let mut lower = vec![f64::NEG_INFINITY; dim];
    let mut upper = vec![f64::INFINITY; dim];
    let mut constraints: Vec<SmoothFn> = Vec::with_capacity(2 * n);

    for s in 0..n {
        let q0 = plan.waypoints[s];
        // Per sensor: (weight, f0, f1) of the tangent bound in D.
        let terms: Vec<(f64, f64, f64, Point)> = sensors
            .iter()
            .zip(&plan.powers[s])
            .filter(|(_, &p)| p > 0.0)
            .map(|(&sp, &p)| {
                let d0 = (q0 - sp).norm_sq() + h2;
                let w = (p * ch.beta0 / ch.sigma2).sqrt();
                (w, d0.powf(-e), e * d0.powf(-e - 1.0), sp)
            })
            .collect();
        let s0: f64 = terms.iter().map(|t| t.0 * t.1).sum();
        let scale = 1.0 / s0.powi(2).max(1.0);
        if s + 1 < n {
            x0[xi(s)] = q0.x;
            x0[xi(s) + 1] = q0.y;
        }
        x0[ai(s)] = aux_start(s0 * s0, (mode == Mode::Outage).then_some(gamma));
        lower[ai(s)] = -1.0;
        upper[ai(s)] = gamma;
        let (ix, ia, free_q) = (xi(s), ai(s), s + 1 < n);
        let qf = scn.q_final();
        constraints.push(Box::new(move |x: &[f64]| {
            let q = if free_q { Point::new(x[ix], x[ix + 1]) } else { qf };
            let mut sum = 0.0;
            let (mut gx, mut gy, mut hd) = (0.0, 0.0, 0.0);
            for &(w, f0, f1, sp) in &terms {
                let d = (q - sp).norm_sq() + h2;
                let d0 = (q0 - sp).norm_sq() + h2;
                sum += w * (f0 - f1 * (d - d0));
                gx += -w * f1 * 2.0 * (q.x - sp.x);
                gy += -w * f1 * 2.0 * (q.y - sp.y);
                hd += -w * f1 * 2.0;
            }
            let value = scale * (2.0 * s0 * sum - s0 * s0 - x[ia]);
            let mut grad = vec![(ia, -scale)];
            let mut hess = Vec::new();
            if free_q {
                grad.push((ix, scale * 2.0 * s0 * gx));
                grad.push((ix + 1, scale * 2.0 * s0 * gy));
                hess.push((ix, ix, scale * 2.0 * s0 * hd));
                hess.push((ix + 1, ix + 1, scale * 2.0 * s0 * hd));
            }
            LocalModel { value, grad, hess }
        }));
    }
    // Normalized speed constraints 1 − ‖q[s] − q[s−1]‖²/step² ≥ 0.
    let inv = 1.0 / (step * step);
    for s in 0..n {
        let prev = (s > 0).then(|| xi(s - 1));
        let cur = (s + 1 < n).then(|| xi(s));
        let (qi, qf) = (scn.q_init(), scn.q_final());
        constraints.push(Box::new(move |x: &[f64]| {
            let a = prev.map_or(qi, |i| Point::new(x[i], x[i + 1]));
            let b = cur.map_or(qf, |i| Point::new(x[i], x[i + 1]));
            let d = b - a;
            let mut grad = Vec::with_capacity(4);
            let mut hess = Vec::with_capacity(6);
            for (o, comp) in [(0, d.x), (1, d.y)] {
                if let Some(i) = cur {
                    grad.push((i + o, -2.0 * comp * inv));
                    hess.push((i + o, i + o, -2.0 * inv));
                }
                if let Some(j) = prev {
                    grad.push((j + o, 2.0 * comp * inv));
                    hess.push((j + o, j + o, -2.0 * inv));
                }
                if let (Some(i), Some(j)) = (cur, prev) {
                    hess.push((i + o, j + o, 2.0 * inv));
                }
            }
            LocalModel { value: 1.0 - d.norm_sq() * inv, grad, hess }
        }));
    }
    let term = objective_term(mode, n, gamma);
    let a_idx: Vec<usize> = (0..n).map(ai).collect();
    let objective: SmoothFn = Box::new(move |x: &[f64]| {
        let mut m = LocalModel::default();
        for &i in &a_idx {
            let (v, g, h) = term(x[i]);
            m.value += v;
            m.grad.push((i, g));
            if h != 0.0 {
                m.hess.push((i, i, h));
            }
        }
        m
    });
    let prog = SmoothProgram { dim, objective, constraints, lower, upper, bandwidth: Some(4) };
    let candidate = match maximize_smooth(&prog, &x0, cfg) {
        Ok(sol) => {
            let mut waypoints = plan.waypoints.clone();
            for (s, w) in waypoints.iter_mut().enumerate().take(n - 1) {
                *w = Point::new(sol.x[xi(s)], sol.x[xi(s) + 1]);
            }
            Some(DiscretePlan { slot_len: plan.slot_len, waypoints, powers: plan.powers.clone() })
        }
        Err(e) if recoverable(&e) => {
            debug!("trajectory subproblem kept the local point: {e}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    finish(plan, candidate, mode, scn, before)
}

/// Optimizes the powers with the waypoints fixed.
pub fn power_subproblem(plan: &DiscretePlan, mode: Mode, scn: &Scenario, cfg: &SolveConfig) -> Result<ScaStep, PlanError> {
    let before = surrogate_objective(plan, mode, scn)?;
    let n = plan.n_slots();
    let budgets = scn.budgets();
    let active: Vec<usize> = (0..scn.num_sensors()).filter(|&k| budgets[k] > 0.0).collect();
    let ka = active.len();
    if n == 0 || ka == 0 {
        return finish(plan, None, mode, scn, before);
    }
    let gamma = if mode == Mode::Outage { scn.require_gamma_min()? } else { f64::INFINITY };
    let width = ka + 1;
    let dim = width * n;
    let pi = move |s: usize, j: usize| width * s + j;
    let ai = move |s: usize| width * s + ka;

    let mut x0 = vec![0.0; dim];
    let mut lower = vec![0.0; dim];
    let mut upper = vec![f64::INFINITY; dim];
    let mut constraints: Vec<SmoothFn> = Vec::with_capacity(n + ka);
    for s in 0..n {
        let q = plan.waypoints[s];
        let c: Vec<f64> = active.iter().map(|&k| snr_coeff(q, k, scn)).collect();
        for (j, &k) in active.iter().enumerate() {
            // Shrink toward the budget interior and off the P = 0 boundary.
            x0[pi(s, j)] = (1.0 - 1e-6) * plan.powers[s][k].max(0.0) + 1e-7 * budgets[k];
        }
        let s0: f64 = (0..ka).map(|j| c[j] * x0[pi(s, j)].sqrt()).sum();
        let scale = 1.0 / s0.powi(2).max(1.0);
        x0[ai(s)] = aux_start(s0 * s0, (mode == Mode::Outage).then_some(gamma));
        lower[ai(s)] = -1.0;
        upper[ai(s)] = gamma;
        let (base, ia) = (pi(s, 0), ai(s));
        constraints.push(Box::new(move |x: &[f64]| {
            let mut sum = 0.0;
            let mut grad = Vec::with_capacity(ka + 1);
            let mut hess = Vec::with_capacity(ka);
            for (j, &cj) in c.iter().enumerate() {
                let p = x[base + j];
                let r = p.sqrt();
                sum += cj * r;
                grad.push((base + j, scale * s0 * cj / r));
                hess.push((base + j, base + j, -scale * s0 * cj / (2.0 * p * r)));
            }
            grad.push((ia, -scale));
            LocalModel { value: scale * (2.0 * s0 * sum - s0 * s0 - x[ia]), grad, hess }
        }));
    }
    for (j, &k) in active.iter().enumerate() {
        let coef = 1.0 / (n as f64 * budgets[k]);
        constraints.push(Box::new(move |x: &[f64]| {
            let total: f64 = (0..n).map(|s| x[pi(s, j)]).sum();
            LocalModel::linear(1.0 - coef * total, (0..n).map(|s| (pi(s, j), -coef)).collect())
        }));
    }
    let term = objective_term(mode, n, gamma);
    let objective: SmoothFn = Box::new(move |x: &[f64]| {
        let mut m = LocalModel::default();
        for s in 0..n {
            let (v, g, h) = term(x[ai(s)]);
            m.value += v;
            m.grad.push((ai(s), g));
            if h != 0.0 {
                m.hess.push((ai(s), ai(s), h));
            }
        }
        m
    });
    let prog = SmoothProgram { dim, objective, constraints, lower, upper, bandwidth: Some(ka) };
    let candidate = match maximize_smooth(&prog, &x0, cfg) {
        Ok(sol) => {
            let mut powers = vec![vec![0.0; scn.num_sensors()]; n];
            for (s, row) in powers.iter_mut().enumerate() {
                for (j, &k) in active.iter().enumerate() {
                    row[k] = sol.x[pi(s, j)].max(0.0);
                }
            }
            Some(DiscretePlan { slot_len: plan.slot_len, waypoints: plan.waypoints.clone(), powers })
        }
        Err(e) if recoverable(&e) => {
            debug!("power subproblem kept the local point: {e}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    finish(plan, candidate, mode, scn, before)
}
