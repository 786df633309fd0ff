//! Exhaustive search over a coarse discretization of the relaxed problem.
//!
//! Only meant for tiny instances in tests: at most two hover points, a few
//! power levels per sensor and point, and time-share fractions on a uniform
//! grid. Every combination meeting the budgets is scored exactly, so the
//! best one is a feasible plan and never beats the true optimum.

use beamtraj::model::{rate_from_snr, snr, Point, PowerVector, Scenario};
use beamtraj::Mode;
use thiserror::Error;

/// Largest number of combinations the oracle will enumerate.
pub const MAX_COMBINATIONS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleGrid {
    /// Spacing of the candidate hover locations over the scenario region.
    pub step_m: f64,
    /// Power levels per sensor, spread evenly over `[0, max_power_factor·P^ave]`.
    pub power_levels: usize,
    pub max_power_factor: f64,
    /// Time fractions are multiples of `1/fractions`.
    pub fractions: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("{0} combinations exceed the limit of {MAX_COMBINATIONS}")]
    BudgetExceeded(u128),
    #[error("the oracle handles at most two sensors, got {0}")]
    TooManySensors(usize),
    #[error("bad discretization: {0}")]
    Malformed(String),
}

fn locations(scn: &Scenario, step: f64) -> Vec<Point> {
    let r = scn.region();
    let nx = ((r.x_hi - r.x_lo) / step + 1e-9).floor() as usize + 1;
    let ny = ((r.y_hi - r.y_lo) / step + 1e-9).floor() as usize + 1;
    (0..nx * ny).map(|i| Point::new(r.x_lo + (i / ny) as f64 * step, r.y_lo + (i % ny) as f64 * step)).collect()
}

/// Power vectors over the level grid, in lexicographic order.
fn power_vectors(budgets: &[f64], levels: usize, factor: f64) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for &b in budgets {
        let top = factor * b;
        out = out
            .into_iter()
            .flat_map(|v: Vec<f64>| {
                (0..levels).map(move |l| {
                    let mut v = v.clone();
                    v.push(if levels > 1 { top * l as f64 / (levels - 1) as f64 } else { 0.0 });
                    v
                })
            })
            .collect();
    }
    out
}

/// Best objective over the discretization: highest average rate, or lowest
/// outage probability.
pub fn brute_force_oracle(scn: &Scenario, mode: Mode, grid: &OracleGrid) -> Result<f64, OracleError> {
    let k = scn.num_sensors();
    if k > 2 {
        return Err(OracleError::TooManySensors(k));
    }
    if !(grid.step_m > 0.0) || grid.power_levels == 0 || grid.fractions == 0 || !(grid.max_power_factor >= 0.0) {
        return Err(OracleError::Malformed(format!("{grid:?}")));
    }
    let gamma = match mode {
        Mode::Outage => Some(scn.require_gamma_min().map_err(|e| OracleError::Malformed(e.to_string()))?),
        Mode::Rate => None,
    };
    let locs = locations(scn, grid.step_m);
    let n = locs.len() as u128;
    let pairs = n * (n + 1) / 2;
    let per_point = (grid.power_levels as u128).pow(k as u32);
    let f = grid.fractions as u128;
    let splits = (f + 1) * (f + 2) / 2;
    let total = pairs * per_point * per_point * splits;
    if total > MAX_COMBINATIONS {
        return Err(OracleError::BudgetExceeded(total));
    }

    let budgets = scn.budgets();
    let powers = power_vectors(&budgets, grid.power_levels, grid.max_power_factor);
    // Value of one (location, power) choice: rate, or 1 if it meets γ.
    let value = |q: Point, p: &[f64]| {
        let s = snr(q, &PowerVector::new(p.to_vec()), scn);
        match gamma {
            None => rate_from_snr(s),
            Some(g) => f64::from(u8::from(s >= g)),
        }
    };
    let scored: Vec<Vec<f64>> = locs.iter().map(|&q| powers.iter().map(|p| value(q, p)).collect()).collect();

    let mut best = 0.0_f64;
    for i in 0..locs.len() {
        for j in i..locs.len() {
            for (a, pa) in powers.iter().enumerate() {
                for (b, pb) in powers.iter().enumerate() {
                    for t1 in 0..=grid.fractions {
                        for t2 in 0..=grid.fractions - t1 {
                            let (x, y) = (t1 as f64 / f as f64, t2 as f64 / f as f64);
                            let fits = (0..k).all(|s| x * pa[s] + y * pb[s] <= budgets[s] * (1.0 + 1e-12));
                            if fits {
                                best = best.max(x * scored[i][a] + y * scored[j][b]);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(match mode {
        Mode::Rate => best,
        Mode::Outage => 1.0 - best,
    })
}
