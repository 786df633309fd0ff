//! Central-cut ellipsoid method for nonsmooth convex minimization over
//! `{x : x ≥ lower}`.
//!
//! Each objective cut yields the lower bound `f(x_k) − ‖g_k‖_{P_k}` on the
//! minimum over the current ellipsoid; the method stops once the best value
//! is certified within `cfg.tol_obj` (relative) of that bound.

use super::{SolveConfig, SolverError};

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidState {
    center: Vec<f64>,
    /// Shape matrix `P`; the ellipsoid is `{x : (x−c)ᵀ P⁻¹ (x−c) ≤ 1}`.
    shape: Vec<Vec<f64>>,
}

impl EllipsoidState {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        let n = center.len();
        let mut shape = vec![vec![0.0; n]; n];
        for (i, row) in shape.iter_mut().enumerate() {
            row[i] = radius * radius;
        }
        Self { center, shape }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    fn shape_times(&self, g: &[f64]) -> Vec<f64> {
        self.shape.iter().map(|row| row.iter().zip(g).map(|(p, v)| p * v).sum()).collect()
    }

    /// `sqrt(gᵀ P g)`: half the width of the ellipsoid along `g`.
    pub fn width_along(&self, g: &[f64]) -> f64 {
        let pg = self.shape_times(g);
        g.iter().zip(&pg).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }

    /// Keeps the half `{x : gᵀ(x − c) ≤ 0}`. Returns `false` if the
    /// ellipsoid has collapsed along `g`.
    pub fn cut(&mut self, g: &[f64]) -> bool {
        let n = self.center.len() as f64;
        let pg = self.shape_times(g);
        let gpg: f64 = g.iter().zip(&pg).map(|(a, b)| a * b).sum();
        if !(gpg > 0.0) || !gpg.is_finite() {
            return false;
        }
        let root = gpg.sqrt();
        let b: Vec<f64> = pg.iter().map(|v| v / root).collect();
        if self.center.len() == 1 {
            self.center[0] -= 0.5 * b[0];
            self.shape[0][0] *= 0.25;
            return true;
        }
        for (c, bi) in self.center.iter_mut().zip(&b) {
            *c -= bi / (n + 1.0);
        }
        let scale = n * n / (n * n - 1.0);
        let k = 2.0 / (n + 1.0);
        let dim = self.center.len();
        for i in 0..dim {
            for j in 0..=i {
                let v = scale * (0.5 * (self.shape[i][j] + self.shape[j][i]) - k * b[i] * b[j]);
                self.shape[i][j] = v;
                self.shape[j][i] = v;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidStep {
    pub value: f64,
    pub subgradient_norm: f64,
    /// Best value seen so far, non-increasing along the history.
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Certified bound on `value − min f`.
    pub gap: f64,
    pub history: Vec<EllipsoidStep>,
}

/// Minimizes the convex function behind `oracle`, which returns the value and
/// one subgradient. The starting ball must contain a minimizer.
pub fn ellipsoid_optimize<F>(
    mut oracle: F,
    x0: &[f64],
    r0: f64,
    lower: &[f64],
    cfg: &SolveConfig,
) -> Result<EllipsoidResult, SolverError>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    if n == 0 || lower.len() != n {
        return Err(SolverError::Malformed("ellipsoid dimension mismatch".into()));
    }
    if !(r0 > 0.0 && r0.is_finite()) || x0.iter().any(|v| !v.is_finite()) || lower.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(SolverError::Malformed("ellipsoid start must be finite with positive radius".into()));
    }
    let max_iters = cfg.ellipsoid_iters(n);
    let mut state = EllipsoidState::ball(x0.to_vec(), r0);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut lower_bound = f64::NEG_INFINITY;
    let mut history = Vec::new();
    let mut converged = false;

    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let x = state.center().to_vec();
        // Feasibility cut on the most violated bound.
        let violated = (0..n)
            .filter(|&i| x[i] < lower[i])
            .max_by(|&a, &b| (lower[a] - x[a]).total_cmp(&(lower[b] - x[b])));
        if let Some(i) = violated {
            let mut g = vec![0.0; n];
            g[i] = -1.0;
            if !state.cut(&g) {
                break;
            }
            continue;
        }
        let (f, g) = oracle(&x);
        if g.len() != n || !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Numerical("oracle returned a non-finite value or subgradient".into()));
        }
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if best.as_ref().is_none_or(|(b, _)| f < *b) {
            best = Some((f, x.clone()));
        }
        let fbest = best.as_ref().map(|b| b.0).unwrap_or(f);
        history.push(EllipsoidStep { value: f, subgradient_norm: gnorm, best: fbest });
        if gnorm == 0.0 {
            lower_bound = f;
            converged = true;
            break;
        }
        lower_bound = lower_bound.max(f - state.width_along(&g));
        if fbest - lower_bound <= cfg.tol_obj * fbest.abs().max(1.0) {
            converged = true;
            break;
        }
        if !state.cut(&g) {
            break;
        }
    }
    let Some((value, x)) = best else {
        return Err(SolverError::IterationLimit(iterations));
    };
    let gap = (value - lower_bound).max(0.0);
    Ok(EllipsoidResult { x, value, iterations, converged, gap, history })
}
