//! First-order lower bounds used to convexify the SNR constraint.
//!
//! The received amplitude of one sensor, `sqrt(P β0) D^(−α/4)` with
//! `D = ‖q − s‖² + H²`, is convex in `D`; its tangent in `D` is concave in
//! `q` and lies below it everywhere. The squared sum `(Σ a_k)²` is convex in
//! `a`, so its tangent at `a⁽ⁱ⁾` is a global lower bound as well.

use serde::Serialize;

use crate::model::{DiscretePlan, Point, Scenario};

/// Tangent lower bound on `sqrt(p β0 d(q)^(−α))` around `q0`.
pub fn amplitude_lower_bound(p: f64, beta0: f64, alpha: f64, altitude: f64, sensor: Point, q: Point, q0: Point) -> f64 {
    let h2 = altitude * altitude;
    let d = (q - sensor).norm_sq() + h2;
    let d0 = (q0 - sensor).norm_sq() + h2;
    let e = alpha / 4.0;
    (p * beta0).sqrt() * (d0.powf(-e) - e * d0.powf(-e - 1.0) * (d - d0))
}

/// Tangent lower bound `2 S0 Σ a − S0²` on `(Σ a)²` with `S0 = Σ a0`.
pub fn square_sum_lower_bound(a: &[f64], a0: &[f64]) -> f64 {
    let s0: f64 = a0.iter().sum();
    2.0 * s0 * a.iter().sum::<f64>() - s0 * s0
}

/// Auxiliary variables of the convexified problem, evaluated at a plan.
///
/// Both bounds are tight at their expansion point, so the auxiliaries of a
/// local point are simply the true amplitudes and squared sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaAuxiliary {
    /// `a[n][k]`: received amplitude of sensor `k` in slot `n`.
    pub a: Vec<Vec<f64>>,
    /// `big_a[n] = (Σ_k a[n][k])²`.
    pub big_a: Vec<f64>,
}

impl ScaAuxiliary {
    pub fn at(plan: &DiscretePlan, scn: &Scenario) -> Self {
        let a: Vec<Vec<f64>> = plan
            .waypoints
            .iter()
            .zip(&plan.powers)
            .map(|(&q, p)| p.iter().enumerate().map(|(k, pk)| (pk * scn.channel_gain(q, k)).sqrt()).collect())
            .collect();
        let big_a = a.iter().map(|row| row.iter().sum::<f64>().powi(2)).collect();
        Self { a, big_a }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tight_at_expansion_point() {
        let (s, q) = (Point::new(10.0, -5.0), Point::new(3.0, 7.0));
        let lb = amplitude_lower_bound(0.8, 1e-3, 2.8, 50.0, s, q, q);
        let d2 = (q - s).norm_sq() + 2500.0;
        let truth = (0.8 * 1e-3 * d2.powf(-1.4)).sqrt();
        assert!((lb - truth).abs() <= 1e-15);
        assert_eq!(square_sum_lower_bound(&[0.2, 0.3], &[0.2, 0.3]), 0.25);
    }
}
