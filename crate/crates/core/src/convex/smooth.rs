//! Log-barrier path following for smooth concave maximization.
//!
//! A program maximizes a concave objective subject to concave constraints
//! `g_i(x) ≥ 0` and box bounds. Callers describe every function through a
//! [`LocalModel`] (value, sparse gradient, sparse Hessian) and may declare a
//! Hessian bandwidth. Rank-one barrier terms that are wider than the band are
//! handled by a Woodbury correction, so problems with a few "global"
//! constraints (energy budgets) stay linear in size.

use log::{debug, trace};

use super::linalg::NewtonSystem;
use super::{SolveConfig, SolverError};

/// Second-order description of a function at one point.
///
/// `hess` lists lower or upper off-diagonal pairs once each; `(i, j, v)`
/// stands for both `H[i][j]` and `H[j][i]`. Gradient indices must be unique.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalModel {
    pub value: f64,
    pub grad: Vec<(usize, f64)>,
    pub hess: Vec<(usize, usize, f64)>,
}

impl LocalModel {
    pub fn linear(value: f64, grad: Vec<(usize, f64)>) -> Self {
        Self { value, grad, hess: Vec::new() }
    }
}

pub type SmoothFn<'a> = Box<dyn Fn(&[f64]) -> LocalModel + 'a>;

pub struct SmoothProgram<'a> {
    pub dim: usize,
    pub objective: SmoothFn<'a>,
    /// Concave functions that must stay nonnegative.
    pub constraints: Vec<SmoothFn<'a>>,
    /// Box bounds; `±∞` marks a free side. Empty means unbounded.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Half-bandwidth of the Hessian; `None` treats it as dense.
    pub bandwidth: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub newton_steps: usize,
    /// Upper bound on `f* − f(x)` certified by the barrier parameter.
    pub gap_bound: f64,
}

const BARRIER_GROWTH: f64 = 10.0;
const CENTERING_TOL: f64 = 1e-7;
const ARMIJO: f64 = 0.01;
const MAX_NEWTON: usize = 20_000;

struct Engine<'p, 'a> {
    prog: &'p SmoothProgram<'a>,
    /// Extra slack variable at index `prog.dim` (feasibility phase).
    bordered: bool,
    lower: Vec<f64>,
    upper: Vec<f64>,
    w: usize,
}

struct Point {
    phi: f64,
    f: f64,
    /// Minimum constraint value in the program's own terms.
    min_g: f64,
}

impl<'p, 'a> Engine<'p, 'a> {
    fn n(&self) -> usize {
        self.prog.dim + usize::from(self.bordered)
    }

    fn n_barriers(&self) -> usize {
        let bounds = self.lower.iter().chain(&self.upper).filter(|b| b.is_finite()).count();
        self.prog.constraints.len() + bounds
    }

    fn objective(&self, x: &[f64]) -> LocalModel {
        if self.bordered {
            LocalModel::linear(x[self.prog.dim], vec![(self.prog.dim, 1.0)])
        } else {
            (self.prog.objective)(x)
        }
    }

    fn constraint(&self, i: usize, x: &[f64]) -> LocalModel {
        let mut m = (self.prog.constraints[i])(&x[..self.prog.dim]);
        if self.bordered {
            m.value -= x[self.prog.dim];
            m.grad.push((self.prog.dim, -1.0));
        }
        m
    }

    fn inside_box(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| v.is_finite() && *v > *l && *v < *u)
    }

    /// Barrier value, or `None` outside the strict interior.
    fn value(&self, x: &[f64], t: f64) -> Option<Point> {
        if !self.inside_box(x) {
            return None;
        }
        let f = self.objective(x).value;
        let mut phi = -t * f;
        let mut min_g = f64::INFINITY;
        for i in 0..self.prog.constraints.len() {
            let g = self.constraint(i, x).value;
            if !(g > 0.0) {
                return None;
            }
            let raw = if self.bordered { g + x[self.prog.dim] } else { g };
            min_g = min_g.min(raw);
            phi -= g.ln();
        }
        for ((v, l), u) in x.iter().zip(&self.lower).zip(&self.upper) {
            if l.is_finite() {
                phi -= (v - l).ln();
            }
            if u.is_finite() {
                phi -= (u - v).ln();
            }
        }
        phi.is_finite().then_some(Point { phi, f, min_g })
    }

    /// Gradient and Newton system of the barrier function at `x`.
    fn derivatives(&mut self, x: &[f64], t: f64) -> (Vec<f64>, NewtonSystem) {
        loop {
            if let Some(r) = self.try_derivatives(x, t) {
                return r;
            }
            debug!("hessian entry outside the declared band; switching to dense factorization");
            self.w = self.prog.dim.saturating_sub(1);
        }
    }

    fn try_derivatives(&self, x: &[f64], t: f64) -> Option<(Vec<f64>, NewtonSystem)> {
        let n = self.n();
        let dim = self.prog.dim;
        let mut grad = vec![0.0; n];
        let mut sys = NewtonSystem::new(dim, self.w, self.bordered);
        let obj = self.objective(x);
        for &(i, g) in &obj.grad {
            grad[i] -= t * g;
        }
        for &(i, j, h) in &obj.hess {
            if !sys.add(i, j, -t * h) {
                return None;
            }
        }
        for c in 0..self.prog.constraints.len() {
            let m = self.constraint(c, x);
            let inv = 1.0 / m.value;
            for &(i, g) in &m.grad {
                grad[i] -= g * inv;
            }
            for &(i, j, h) in &m.hess {
                if !sys.add(i, j, -h * inv) {
                    return None;
                }
            }
            sys.add_rank_one(&m.grad, inv * inv);
        }
        for (i, v) in x.iter().enumerate() {
            if self.lower[i].is_finite() {
                let d = 1.0 / (v - self.lower[i]);
                grad[i] -= d;
                sys.add(i, i, d * d);
            }
            if self.upper[i].is_finite() {
                let d = 1.0 / (self.upper[i] - v);
                grad[i] += d;
                sys.add(i, i, d * d);
            }
        }
        Some((grad, sys))
    }

    /// Newton's method on the barrier function for fixed `t`.
    fn center(
        &mut self,
        x: &mut Vec<f64>,
        t: f64,
        steps: &mut usize,
        stop: &dyn Fn(&Point) -> bool,
    ) -> Result<Point, SolverError> {
        let mut here = self
            .value(x, t)
            .ok_or_else(|| SolverError::Numerical("iterate left the interior".into()))?;
        loop {
            if stop(&here) {
                return Ok(here);
            }
            if *steps >= MAX_NEWTON {
                return Err(SolverError::IterationLimit(*steps));
            }
            let (grad, sys) = self.derivatives(x, t);
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(dx) = sys.solve(&rhs) else {
                return Err(SolverError::Numerical("newton system could not be factored".into()));
            };
            let slope: f64 = grad.iter().zip(&dx).map(|(g, d)| g * d).sum();
            if !(-slope / 2.0 > CENTERING_TOL) {
                return Ok(here);
            }
            let mut s = 1.0;
            let slack = 1e-13 * (1.0 + here.phi.abs());
            let mut accepted = None;
            while s > 1e-20 {
                let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + s * d).collect();
                if let Some(p) = self.value(&trial, t) {
                    if p.phi <= here.phi + ARMIJO * s * slope + slack {
                        accepted = Some((trial, p));
                        break;
                    }
                }
                s *= 0.5;
            }
            *steps += 1;
            match accepted {
                Some((trial, p)) => {
                    *x = trial;
                    here = p;
                }
                // No progress possible at machine precision: treat as centered.
                None => return Ok(here),
            }
        }
    }

    fn run(
        &mut self,
        mut x: Vec<f64>,
        cfg: &SolveConfig,
        stop: &dyn Fn(&Point) -> bool,
    ) -> Result<(SmoothSolution, bool), SolverError> {
        let m = self.n_barriers() as f64;
        let f0 = self.objective(&x).value;
        let mut steps = 0;
        if m == 0.0 {
            // Unconstrained: a single Newton solve on −f.
            let p = self.center(&mut x, 1.0, &mut steps, stop)?;
            let stopped = stop(&p);
            return Ok((SmoothSolution { objective: p.f, x, newton_steps: steps, gap_bound: 0.0 }, stopped));
        }
        let mut t = m / f0.abs().max(1.0);
        loop {
            let p = self.center(&mut x, t, &mut steps, stop)?;
            trace!("barrier t={t:.3e} f={:.9e} steps={steps}", p.f);
            if stop(&p) {
                return Ok((SmoothSolution { objective: p.f, x, newton_steps: steps, gap_bound: m / t }, true));
            }
            if m / t <= cfg.tol_obj * p.f.abs().max(1.0) {
                return Ok((SmoothSolution { objective: p.f, x, newton_steps: steps, gap_bound: m / t }, false));
            }
            t *= BARRIER_GROWTH;
        }
    }
}

fn bounds(prog: &SmoothProgram) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
    let n = prog.dim;
    let lower = if prog.lower.is_empty() { vec![f64::NEG_INFINITY; n] } else { prog.lower.clone() };
    let upper = if prog.upper.is_empty() { vec![f64::INFINITY; n] } else { prog.upper.clone() };
    if lower.len() != n || upper.len() != n {
        return Err(SolverError::Malformed("bound vectors do not match the dimension".into()));
    }
    if let Some(i) = (0..n).find(|&i| lower[i].is_nan() || upper[i].is_nan() || lower[i] >= upper[i]) {
        return Err(SolverError::Malformed(format!("empty box for variable {i}")));
    }
    Ok((lower, upper))
}

fn engine<'p, 'a>(prog: &'p SmoothProgram<'a>, bordered: bool) -> Result<Engine<'p, 'a>, SolverError> {
    if prog.dim == 0 {
        return Err(SolverError::Malformed("program has no variables".into()));
    }
    let (mut lower, mut upper) = bounds(prog)?;
    if bordered {
        lower.push(f64::NEG_INFINITY);
        upper.push(f64::INFINITY);
    }
    let w = prog.bandwidth.unwrap_or(prog.dim - 1).min(prog.dim - 1);
    Ok(Engine { prog, bordered, lower, upper, w })
}

/// Moves `x0` strictly inside the box.
fn project_into_box(x0: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x0.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&v, (&l, &u))| {
            let width = u - l;
            let margin = |b: f64| {
                let m = 1e-6 * (1.0 + b.abs());
                if width.is_finite() { m.min(0.25 * width) } else { m }
            };
            let v = if v.is_finite() { v } else { 0.0 };
            let lo = if l.is_finite() { l + margin(l) } else { f64::NEG_INFINITY };
            let hi = if u.is_finite() { u - margin(u) } else { f64::INFINITY };
            v.clamp(lo, hi)
        })
        .collect()
}

/// Finds `x` inside the box with every constraint at least `cfg.tol_feas`.
///
/// Maximizes a common slack `s` subject to `g_i(x) − s ≥ 0`, stopping as soon
/// as the slack clears the tolerance.
pub fn find_strictly_feasible(prog: &SmoothProgram, x0: &[f64], cfg: &SolveConfig) -> Result<Vec<f64>, SolverError> {
    if x0.len() != prog.dim {
        return Err(SolverError::Malformed("starting point has the wrong dimension".into()));
    }
    let (lower, upper) = bounds(prog)?;
    let x = project_into_box(x0, &lower, &upper);
    let min_g = prog.constraints.iter().map(|g| g(&x).value).fold(f64::INFINITY, f64::min);
    if min_g.is_nan() {
        return Err(SolverError::Numerical("constraint is not finite at the start".into()));
    }
    if min_g >= cfg.tol_feas {
        return Ok(x);
    }
    let mut eng = engine(prog, true)?;
    // s ≤ 1 keeps the phase bounded; constraints are expected to be normalized.
    let cap = 1.0_f64.max(2.0 * cfg.tol_feas);
    *eng.upper.last_mut().expect("bordered") = cap;
    let mut z = x;
    z.push(min_g - 1.0);
    let target = cfg.tol_feas;
    let (sol, reached) = eng.run(z, cfg, &|p: &Point| p.min_g >= target)?;
    if reached {
        let mut x = sol.x;
        x.truncate(prog.dim);
        Ok(x)
    } else {
        Err(SolverError::NoStrictlyFeasibleStart(sol.objective))
    }
}

/// Maximizes `prog` starting from `x0`, which need not be strictly feasible.
pub fn maximize_smooth(prog: &SmoothProgram, x0: &[f64], cfg: &SolveConfig) -> Result<SmoothSolution, SolverError> {
    if x0.len() != prog.dim {
        return Err(SolverError::Malformed("starting point has the wrong dimension".into()));
    }
    let mut eng = engine(prog, false)?;
    let start = if eng.value(x0, 1.0).is_some() {
        x0.to_vec()
    } else {
        find_strictly_feasible(prog, x0, cfg)?
    };
    let (sol, _) = eng.run(start, cfg, &|_: &Point| false)?;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_concave_quadratic_in_box() {
        // max −(x−2)² − (y+1)² with 0 ≤ x ≤ 1, y free but x + y ≤ 0.5
        let prog = SmoothProgram {
            dim: 2,
            objective: Box::new(|x: &[f64]| LocalModel {
                value: -(x[0] - 2.0).powi(2) - (x[1] + 1.0).powi(2),
                grad: vec![(0, -2.0 * (x[0] - 2.0)), (1, -2.0 * (x[1] + 1.0))],
                hess: vec![(0, 0, -2.0), (1, 1, -2.0)],
            }),
            constraints: vec![Box::new(|x: &[f64]| LocalModel::linear(0.5 - x[0] - x[1], vec![(0, -1.0), (1, -1.0)]))],
            lower: vec![0.0, f64::NEG_INFINITY],
            upper: vec![1.0, f64::INFINITY],
            bandwidth: Some(1),
        };
        let sol = maximize_smooth(&prog, &[0.5, -3.0], &SolveConfig::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-5, "{:?}", sol.x);
        assert!((sol.x[1] + 1.0).abs() < 1e-5, "{:?}", sol.x);
        assert!((sol.objective + 1.0).abs() < 1e-5);
    }

    #[test]
    fn infeasible_start_is_repaired() {
        // max x subject to 1 − x² − y² ≥ 0, starting outside the disc.
        let prog = SmoothProgram {
            dim: 2,
            objective: Box::new(|x: &[f64]| LocalModel::linear(x[0], vec![(0, 1.0)])),
            constraints: vec![Box::new(|x: &[f64]| LocalModel {
                value: 1.0 - x[0] * x[0] - x[1] * x[1],
                grad: vec![(0, -2.0 * x[0]), (1, -2.0 * x[1])],
                hess: vec![(0, 0, -2.0), (1, 1, -2.0)],
            })],
            lower: vec![],
            upper: vec![],
            bandwidth: None,
        };
        let sol = maximize_smooth(&prog, &[3.0, 3.0], &SolveConfig::default()).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-5);
    }

    #[test]
    fn empty_interior_is_reported() {
        // x ≥ 1 and x ≤ 0 cannot both hold.
        let prog = SmoothProgram {
            dim: 1,
            objective: Box::new(|x: &[f64]| LocalModel::linear(x[0], vec![(0, 1.0)])),
            constraints: vec![
                Box::new(|x: &[f64]| LocalModel::linear(x[0] - 1.0, vec![(0, 1.0)])),
                Box::new(|x: &[f64]| LocalModel::linear(-x[0], vec![(0, -1.0)])),
            ],
            lower: vec![],
            upper: vec![],
            bandwidth: None,
        };
        match find_strictly_feasible(&prog, &[0.5], &SolveConfig::default()) {
            Err(SolverError::NoStrictlyFeasibleStart(s)) => assert!((s + 0.5).abs() < 1e-4, "{s}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wide_constraint_uses_lowrank_path() {
        // max Σ ln(1 + x_i) with Σ x_i ≤ 10 over 50 variables: x_i = 0.2.
        let n = 50;
        let prog = SmoothProgram {
            dim: n,
            objective: Box::new(move |x: &[f64]| LocalModel {
                value: x.iter().map(|v| (1.0 + v).ln()).sum(),
                grad: x.iter().enumerate().map(|(i, v)| (i, 1.0 / (1.0 + v))).collect(),
                hess: x.iter().enumerate().map(|(i, v)| (i, i, -1.0 / (1.0 + v).powi(2))).collect(),
            }),
            constraints: vec![Box::new(move |x: &[f64]| {
                LocalModel::linear(10.0 - x.iter().sum::<f64>(), (0..n).map(|i| (i, -1.0)).collect())
            })],
            lower: vec![0.0; n],
            upper: vec![],
            bandwidth: Some(0),
        };
        let sol = maximize_smooth(&prog, &vec![0.01; n], &SolveConfig::default()).unwrap();
        for v in &sol.x {
            assert!((v - 0.2).abs() < 1e-5);
        }
    }
}
