//! Turns a finite-horizon outage plan into an on-off schedule.
//!
//! Slots are ranked by SNR. For a candidate count `N′`, the best `N′` slots
//! must reach the threshold while the budgets hold over the whole horizon;
//! in amplitude variables `ρ = sqrt(P)` the SNR condition is linear and the
//! budget convex, so feasibility is a convex question. The largest feasible
//! count is found by bisection.

use log::{debug, warn};
use serde::Serialize;

use crate::convex::{find_strictly_feasible, largest_feasible, LocalModel, SmoothFn, SmoothProgram, SolveConfig};
use crate::model::{evaluate_plan, DiscretePlan, Scenario};
use crate::PlanError;

/// Per-slot SNR margins `SNR[n] − γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotSlack(pub Vec<f64>);

impl SlotSlack {
    pub fn of(plan: &DiscretePlan, scn: &Scenario) -> Result<Self, PlanError> {
        let g = scn.require_gamma_min()?;
        Ok(Self(evaluate_plan(plan, scn).per_slot_snr.iter().map(|s| s - g).collect()))
    }

    /// Number of slots at or above the threshold.
    pub fn served(&self) -> usize {
        self.0.iter().filter(|&&l| l >= 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutagePostResult {
    /// Slot indices sorted by SNR, best first.
    pub order: Vec<usize>,
    /// Number of served slots; they are `order[..n_served]`.
    pub n_served: usize,
    /// Same waypoints with the new powers; unserved slots are silent.
    pub plan: DiscretePlan,
    /// Unserved slot indices in ascending order.
    pub outage_slots: Vec<usize>,
    pub outage_prob: f64,
    /// True when the runtime check found non-monotone feasibility and the
    /// count came from a linear scan.
    pub linear_scan: bool,
}

/// Amplitude coefficients `sqrt(β0 d^(−α)/σ²)` of the active sensors.
fn coefficients(plan: &DiscretePlan, slot: usize, active: &[usize], scn: &Scenario) -> Vec<f64> {
    let q = plan.waypoints[slot];
    active.iter().map(|&k| (scn.channel_gain(q, k) / scn.channel().sigma2).sqrt()).collect()
}

/// Powers that serve the first `m` slots of `order` within the budgets, with
/// every other slot silent; `None` if no such powers were found.
pub fn serve_top_slots(plan: &DiscretePlan, order: &[usize], m: usize, scn: &Scenario, cfg: &SolveConfig) -> Option<DiscretePlan> {
    let k = scn.num_sensors();
    let n_total = plan.n_slots();
    if m == 0 {
        return Some(DiscretePlan { slot_len: plan.slot_len, waypoints: plan.waypoints.clone(), powers: vec![vec![0.0; k]; n_total] });
    }
    let gamma = scn.require_gamma_min().ok()?;
    let budgets = scn.budgets();
    let active: Vec<usize> = (0..k).filter(|&i| budgets[i] > 0.0).collect();
    let ka = active.len();
    if ka == 0 {
        return None;
    }
    let dim = ka * m;
    let inv_sqrt_g = 1.0 / gamma.sqrt();
    let mut constraints: Vec<SmoothFn> = Vec::with_capacity(m + ka);
    for (s, &slot) in order[..m].iter().enumerate() {
        let c = coefficients(plan, slot, &active, scn);
        constraints.push(Box::new(move |x: &[f64]| {
            let base = s * ka;
            let v: f64 = c.iter().enumerate().map(|(j, cj)| cj * x[base + j]).sum();
            LocalModel::linear(v * inv_sqrt_g - 1.0, c.iter().enumerate().map(|(j, cj)| (base + j, cj * inv_sqrt_g)).collect())
        }));
    }
    for (j, &kk) in active.iter().enumerate() {
        let coef = 1.0 / (n_total as f64 * budgets[kk]);
        constraints.push(Box::new(move |x: &[f64]| {
            let mut used = 0.0;
            let mut grad = Vec::with_capacity(m);
            let mut hess = Vec::with_capacity(m);
            for s in 0..m {
                let i = s * ka + j;
                used += x[i] * x[i];
                grad.push((i, -2.0 * coef * x[i]));
                hess.push((i, i, -2.0 * coef));
            }
            LocalModel { value: 1.0 - coef * used, grad, hess }
        }));
    }
    let prog = SmoothProgram {
        dim,
        objective: Box::new(|_: &[f64]| LocalModel::default()),
        constraints,
        lower: vec![0.0; dim],
        upper: vec![f64::INFINITY; dim],
        bandwidth: Some(ka.saturating_sub(1)),
    };
    let x0: Vec<f64> = order[..m]
        .iter()
        .flat_map(|&slot| active.iter().map(move |&kk| plan.powers[slot][kk].max(0.0).sqrt()))
        .collect();
    let x = match find_strictly_feasible(&prog, &x0, cfg) {
        Ok(x) => x,
        Err(e) => {
            debug!("{m} served slots infeasible: {e}");
            return None;
        }
    };
    let mut powers = vec![vec![0.0; k]; n_total];
    for (s, &slot) in order[..m].iter().enumerate() {
        for (j, &kk) in active.iter().enumerate() {
            powers[slot][kk] = x[s * ka + j].powi(2);
        }
    }
    // Confirm with the model itself before accepting.
    let cand = DiscretePlan { slot_len: plan.slot_len, waypoints: plan.waypoints.clone(), powers };
    let snr = evaluate_plan(&cand, scn).per_slot_snr;
    let ok = order[..m].iter().all(|&slot| snr[slot] >= gamma - cfg.tol_feas) && cand.check(scn).is_ok();
    ok.then_some(cand)
}

/// Sorts slots by SNR and keeps the largest set that can be served.
pub fn outage_postprocess(plan: &DiscretePlan, scn: &Scenario, cfg: &SolveConfig) -> Result<OutagePostResult, PlanError> {
    scn.require_gamma_min()?;
    let n = plan.n_slots();
    let snr = evaluate_plan(plan, scn).per_slot_snr;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| snr[b].total_cmp(&snr[a]));

    let mut cache: Vec<Option<Option<DiscretePlan>>> = vec![None; n + 1];
    let mut solve = |m: usize| -> bool {
        if cache[m].is_none() {
            cache[m] = Some(serve_top_slots(plan, &order, m, scn, cfg));
        }
        cache[m].as_ref().is_some_and(|c| c.is_some())
    };
    let mut best = largest_feasible(&mut solve, 0, n).unwrap_or(0);
    let mut linear_scan = false;
    // Spot check of the monotonicity bisection relies on.
    if best > 1 && !solve(best / 2) {
        warn!("served-slot feasibility is not monotone; falling back to a linear scan");
        linear_scan = true;
        best = (0..=n).rev().find(|&m| solve(m)).unwrap_or(0);
    }
    let out = cache[best].take().flatten().expect("the chosen count was solved");
    let mut outage_slots: Vec<usize> = order[best..].to_vec();
    outage_slots.sort_unstable();
    Ok(OutagePostResult {
        order,
        n_served: best,
        plan: out,
        outage_slots,
        outage_prob: if n == 0 { 0.0 } else { 1.0 - best as f64 / n as f64 },
        linear_scan,
    })
}
