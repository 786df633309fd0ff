//! Banded Cholesky with low-rank and bordered corrections.
//!
//! Newton systems of the barrier method have the shape
//! `[[B + U Uᵀ, e], [eᵀ, d]]` where `B` is banded, `U` has a handful of
//! dense columns and the optional border `(e, d)` carries one extra variable
//! coupled to everything (the slack of the feasibility phase).

/// Symmetric banded matrix, lower triangle stored row by row.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    w: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn zeros(n: usize, w: usize) -> Self {
        let w = w.min(n.saturating_sub(1));
        Self { n, w, data: vec![0.0; n * (w + 1)] }
    }

    pub(crate) fn bandwidth(&self) -> usize {
        self.w
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.w);
        i * (self.w + 1) + (j + self.w - i)
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.w {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` at `(i, j)` and its mirror. Returns `false` outside the band.
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) -> bool {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.w {
            return false;
        }
        let k = self.idx(i, j);
        self.data[k] += v;
        true
    }

    pub(crate) fn max_abs_diag(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).abs()).fold(0.0, f64::max)
    }

    /// Cholesky factor of `self + shift·I`, or `None` if not positive definite.
    pub(crate) fn cholesky(&self, shift: f64) -> Option<BandCholesky> {
        let (n, w) = (self.n, self.w);
        let mut l = self.clone();
        for i in 0..n {
            let k = l.idx(i, i);
            l.data[k] += shift;
        }
        for i in 0..n {
            let lo = i.saturating_sub(w);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(w));
                let mut sum = l.data[l.idx(i, j)];
                for k in klo..j {
                    sum -= l.data[l.idx(i, k)] * l.data[l.idx(j, k)];
                }
                let pos = l.idx(i, j);
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return None;
                    }
                    l.data[pos] = sum.sqrt();
                } else {
                    l.data[pos] = sum / l.data[l.idx(j, j)];
                }
            }
        }
        Some(BandCholesky { l })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let l = &self.l;
        let (n, w) = (l.n, l.w);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(w)..i {
                s -= l.data[l.idx(i, k)] * b[k];
            }
            b[i] = s / l.data[l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + w + 1).min(n) {
                s -= l.data[l.idx(k, i)] * b[k];
            }
            b[i] = s / l.data[l.idx(i, i)];
        }
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(B + U Uᵀ)` factored through Woodbury's identity.
struct LowRankFactor<'a> {
    chol: BandCholesky,
    u: &'a [Vec<f64>],
    /// `B⁻¹ U`, one column per vector of `U`.
    z: Vec<Vec<f64>>,
    cap: Option<BandCholesky>,
}

impl<'a> LowRankFactor<'a> {
    fn new(band: &BandMatrix, u: &'a [Vec<f64>], shift: f64) -> Option<Self> {
        let chol = band.cholesky(shift)?;
        let z: Vec<Vec<f64>> = u.iter().map(|col| chol.solve(col)).collect();
        let cap = if u.is_empty() {
            None
        } else {
            let k = u.len();
            let mut c = BandMatrix::zeros(k, k - 1);
            for i in 0..k {
                for j in 0..=i {
                    let v = dot(&u[i], &z[j]) + if i == j { 1.0 } else { 0.0 };
                    c.add(i, j, v);
                }
            }
            Some(c.cholesky(0.0)?)
        };
        Some(Self { chol, u, z, cap })
    }

    fn solve(&self, r: &[f64]) -> Vec<f64> {
        let mut y = self.chol.solve(r);
        if let Some(cap) = &self.cap {
            let uy: Vec<f64> = self.u.iter().map(|col| dot(col, &y)).collect();
            let c = cap.solve(&uy);
            for (zj, cj) in self.z.iter().zip(&c) {
                for (yi, zi) in y.iter_mut().zip(zj) {
                    *yi -= cj * zi;
                }
            }
        }
        y
    }
}

/// Symmetric Newton system `[[B + U Uᵀ, e], [eᵀ, d]]`.
#[derive(Debug, Clone)]
pub(crate) struct NewtonSystem {
    pub(crate) band: BandMatrix,
    pub(crate) lowrank: Vec<Vec<f64>>,
    /// `Some((e, d))` when a border variable is present; it is the last index.
    pub(crate) border: Option<(Vec<f64>, f64)>,
}

impl NewtonSystem {
    pub(crate) fn new(n_main: usize, w: usize, bordered: bool) -> Self {
        Self {
            band: BandMatrix::zeros(n_main, w),
            lowrank: Vec::new(),
            border: bordered.then(|| (vec![0.0; n_main], 0.0)),
        }
    }

    pub(crate) fn n_main(&self) -> usize {
        self.band.n
    }

    /// Adds a Hessian entry; returns `false` if it falls outside the band.
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) -> bool {
        let n = self.n_main();
        match (i >= n, j >= n) {
            (false, false) => self.band.add(i, j, v),
            (true, true) => {
                self.border.as_mut().expect("border index without border").1 += v;
                true
            }
            (true, false) => {
                self.border.as_mut().expect("border index without border").0[j] += v;
                true
            }
            (false, true) => {
                self.border.as_mut().expect("border index without border").0[i] += v;
                true
            }
        }
    }

    /// Adds `c·v vᵀ` for sparse `v` and `c > 0`. Terms too wide for the band
    /// become a low-rank column.
    pub(crate) fn add_rank_one(&mut self, v: &[(usize, f64)], c: f64) {
        let n = self.n_main();
        let (lo, hi) = v
            .iter()
            .filter(|(i, _)| *i < n)
            .fold((usize::MAX, 0), |(lo, hi), (i, _)| (lo.min(*i), hi.max(*i)));
        let main_fits = lo == usize::MAX || hi - lo <= self.band.bandwidth();
        if main_fits {
            for (a, &(i, vi)) in v.iter().enumerate() {
                for &(j, vj) in &v[..=a] {
                    if i < n && j < n {
                        self.band.add(i, j, c * vi * vj);
                    }
                }
            }
        } else {
            let mut col = vec![0.0; n];
            let s = c.sqrt();
            for &(i, vi) in v {
                if i < n {
                    col[i] += s * vi;
                }
            }
            self.lowrank.push(col);
        }
        for &(i, vi) in v {
            if i >= n {
                // Border column and corner; the column entry stands for both
                // mirrored positions.
                for &(j, vj) in v {
                    self.add(i, j, c * vi * vj);
                }
            }
        }
    }

    /// Solves the system, adding `δ·I` with growing `δ` whenever the matrix
    /// is not numerically positive definite.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let scale = 1.0 + self.band.max_abs_diag();
        let mut shift = 0.0;
        for _ in 0..12 {
            if let Some(sol) = self.try_solve(rhs, shift) {
                if sol.iter().all(|v| v.is_finite()) {
                    return Some(sol);
                }
            }
            shift = if shift == 0.0 { 1e-12 * scale } else { shift * 100.0 };
        }
        None
    }

    fn try_solve(&self, rhs: &[f64], shift: f64) -> Option<Vec<f64>> {
        let n = self.n_main();
        let fac = LowRankFactor::new(&self.band, &self.lowrank, shift)?;
        match &self.border {
            None => Some(fac.solve(&rhs[..n])),
            Some((e, d)) => {
                let z = fac.solve(e);
                let y = fac.solve(&rhs[..n]);
                let sigma = d + shift - dot(e, &z);
                if !(sigma > 0.0) {
                    return None;
                }
                let xs = (rhs[n] - dot(e, &y)) / sigma;
                let mut x: Vec<f64> = y.iter().zip(&z).map(|(yi, zi)| yi - zi * xs).collect();
                x.push(xs);
                Some(x)
            }
        }
    }

    /// Dense product, used only by tests.
    #[cfg(test)]
    pub(crate) fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_main();
        let mut out = vec![0.0; x.len()];
        for i in 0..n {
            for j in 0..n {
                out[i] += self.band.get(i, j) * x[j];
            }
        }
        for col in &self.lowrank {
            let s = dot(col, &x[..n]);
            for i in 0..n {
                out[i] += col[i] * s;
            }
        }
        if let Some((e, d)) = &self.border {
            for i in 0..n {
                out[i] += e[i] * x[n];
            }
            out[n] = dot(e, &x[..n]) + d * x[n];
        }
        out
    }
}
