//! Dense two-phase simplex.
//!
//! Problems are stated as `maximize c·x` subject to rows `a·x {≤,≥,=} b` and
//! `x ≥ lower`. Pivoting follows Bland's rule, so the method cannot cycle;
//! it is meant for the tiny time-sharing programs of the relaxed planners.

use super::{SolveConfig, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LpRow {
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self { coeffs, sense: Sense::Le, rhs }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    /// Per-variable lower bounds; empty means all zero.
    pub lower: Vec<f64>,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        Self { objective, rows: Vec::new(), lower: Vec::new() }
    }

    pub fn row(mut self, row: LpRow) -> Self {
        self.rows.push(row);
        self
    }

    fn check(&self) -> Result<(), SolverError> {
        let m = self.objective.len();
        if m == 0 {
            return Err(SolverError::Malformed("no variables".into()));
        }
        if !self.lower.is_empty() && self.lower.len() != m {
            return Err(SolverError::Malformed("lower bound length".into()));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.coeffs.len() != m {
                return Err(SolverError::Malformed(format!("row {i} has {} coefficients, expected {m}", r.coeffs.len())));
            }
            if !r.rhs.is_finite() || r.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(SolverError::Malformed(format!("row {i} is not finite")));
            }
        }
        if self.objective.iter().chain(&self.lower).any(|c| !c.is_finite()) {
            return Err(SolverError::Malformed("objective or bounds not finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

const PIVOT_EPS: f64 = 1e-11;

struct Tableau {
    /// `rows × (cols + 1)`; the last column is the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    pivots: usize,
    max_pivots: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.a[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Maximizes `cost·x` over columns flagged in `allowed`.
    fn run(&mut self, cost: &[f64], allowed: &[bool]) -> Result<(), SolverError> {
        loop {
            if self.pivots >= self.max_pivots {
                return Err(SolverError::IterationLimit(self.pivots));
            }
            let scale = 1.0 + cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let entering = (0..self.cols).filter(|&j| allowed[j]).find(|&j| {
                let reduced = cost[j]
                    - self
                        .basis
                        .iter()
                        .enumerate()
                        .map(|(i, &b)| cost[b] * self.a[i][j])
                        .sum::<f64>();
                reduced > PIVOT_EPS * scale
            });
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.a.len() {
                let aij = self.a[i][c];
                if aij > PIVOT_EPS {
                    let ratio = self.rhs(i) / aij;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - PIVOT_EPS * (1.0 + br.abs())
                                || (ratio <= br + PIVOT_EPS * (1.0 + br.abs()) && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Err(SolverError::Unbounded) };
            self.pivot(r, c);
        }
    }
}

/// Solves `lp` to basis optimality.
pub fn solve_lp(lp: &LinearProgram, cfg: &SolveConfig) -> Result<LpSolution, SolverError> {
    lp.check()?;
    let n = lp.objective.len();
    let lower: Vec<f64> = if lp.lower.is_empty() { vec![0.0; n] } else { lp.lower.clone() };

    // Shift to x' = x − lower ≥ 0 and make every right-hand side nonnegative.
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = lp
        .rows
        .iter()
        .map(|r| {
            let shift: f64 = r.coeffs.iter().zip(&lower).map(|(a, l)| a * l).sum();
            let mut coeffs = r.coeffs.clone();
            let mut rhs = r.rhs - shift;
            let mut sense = r.sense;
            if rhs < 0.0 {
                coeffs.iter_mut().for_each(|c| *c = -*c);
                rhs = -rhs;
                sense = match sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
            (coeffs, sense, rhs)
        })
        .collect();

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let cols = n + n_slack + n_art;
    let mut a = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let (mut s_col, mut a_col) = (n, n + n_slack);
    for (i, (coeffs, sense, rhs)) in rows.iter_mut().enumerate() {
        a[i][..n].copy_from_slice(coeffs);
        a[i][cols] = *rhs;
        match sense {
            Sense::Le => {
                a[i][s_col] = 1.0;
                basis[i] = s_col;
                s_col += 1;
            }
            Sense::Ge => {
                a[i][s_col] = -1.0;
                s_col += 1;
                a[i][a_col] = 1.0;
                basis[i] = a_col;
                a_col += 1;
            }
            Sense::Eq => {
                a[i][a_col] = 1.0;
                basis[i] = a_col;
                a_col += 1;
            }
        }
    }
    let max_pivots = cfg.max_iters.unwrap_or(0).max(50 * (cols + m + 10));
    let mut tab = Tableau { a, basis, cols, pivots: 0, max_pivots };

    if n_art > 0 {
        let mut cost = vec![0.0; cols];
        cost[n + n_slack..].iter_mut().for_each(|c| *c = -1.0);
        tab.run(&cost, &vec![true; cols])?;
        let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= n + n_slack).map(|i| tab.rhs(i)).sum();
        let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);
        if infeas > 1e-9 * scale {
            return Err(SolverError::Infeasible);
        }
        // Drive remaining (zero-level) artificials out of the basis.
        for i in 0..m {
            if tab.basis[i] >= n + n_slack {
                if let Some(c) = (0..n + n_slack).find(|&j| tab.a[i][j].abs() > 1e-9) {
                    tab.pivot(i, c);
                }
            }
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.objective);
    let allowed: Vec<bool> = (0..cols).map(|j| j < n + n_slack).collect();
    tab.run(&cost, &allowed)?;

    let mut x = lower.clone();
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] += tab.rhs(i).max(0.0);
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, objective, pivots: tab.pivots })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_binding_row() {
        let lp = LinearProgram::maximize(vec![1.0, 1.0]).row(LpRow::le(vec![1.0, 1.0], 10.0));
        let sol = solve_lp(&lp, &SolveConfig::default()).unwrap();
        assert!((sol.objective - 10.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_is_infeasible() {
        let lp = LinearProgram::maximize(vec![1.0]).row(LpRow::le(vec![1.0], -1.0));
        assert_eq!(solve_lp(&lp, &SolveConfig::default()), Err(SolverError::Infeasible));
    }

    #[test]
    fn unbounded_detected() {
        let lp = LinearProgram::maximize(vec![1.0, 0.0]).row(LpRow::le(vec![-1.0, 1.0], 1.0));
        assert_eq!(solve_lp(&lp, &SolveConfig::default()), Err(SolverError::Unbounded));
    }

    #[test]
    fn equality_and_lower_bounds() {
        // max x + 2y, x + y = 4, x ≥ 1, y ≥ 0.5, y ≤ 2
        let lp = LinearProgram {
            objective: vec![1.0, 2.0],
            rows: vec![
                LpRow { coeffs: vec![1.0, 1.0], sense: Sense::Eq, rhs: 4.0 },
                LpRow::le(vec![0.0, 1.0], 2.0),
            ],
            lower: vec![1.0, 0.5],
        };
        let sol = solve_lp(&lp, &SolveConfig::default()).unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 2.0).abs() < 1e-12);
        assert!((sol.objective - 6.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic cycling example for the largest-coefficient rule.
        let lp = LinearProgram::maximize(vec![10.0, -57.0, -9.0, -24.0])
            .row(LpRow::le(vec![0.5, -5.5, -2.5, 9.0], 0.0))
            .row(LpRow::le(vec![0.5, -1.5, -0.5, 1.0], 0.0))
            .row(LpRow::le(vec![1.0, 0.0, 0.0, 0.0], 1.0));
        let sol = solve_lp(&lp, &SolveConfig::default()).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }
}
