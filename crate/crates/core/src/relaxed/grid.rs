//! Exhaustive location search over a uniform grid of the flight region.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::model::{Point, Scenario};

/// Grid nodes of the flight region with cached channel gains.
///
/// Nodes are ordered x-major, so a lower index is lexicographically smaller
/// in `(x, y)`; every tie-break below relies on that.
#[derive(Debug, Clone)]
pub struct LocationGrid {
    step: f64,
    x_lo: f64,
    y_lo: f64,
    nx: usize,
    ny: usize,
    k: usize,
    /// `gains[i·K + k] = β0 d_k(node i)^(−α)`.
    gains: Vec<f64>,
}

fn axis_count(lo: f64, hi: f64, step: f64) -> usize {
    ((hi - lo) / step + 1e-9).floor() as usize + 1
}

impl LocationGrid {
    pub fn new(scn: &Scenario, step: f64) -> Self {
        assert!(step > 0.0 && step.is_finite(), "grid step must be positive");
        let r = scn.region();
        let nx = axis_count(r.x_lo, r.x_hi, step);
        let ny = axis_count(r.y_lo, r.y_hi, step);
        let k = scn.num_sensors();
        let mut grid = Self { step, x_lo: r.x_lo, y_lo: r.y_lo, nx, ny, k, gains: Vec::new() };
        grid.gains = (0..nx * ny)
            .into_par_iter()
            .flat_map_iter(|i| {
                let q = grid.point(i);
                (0..k).map(move |s| scn.channel_gain(q, s))
            })
            .collect();
        grid
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn point(&self, i: usize) -> Point {
        let (ix, iy) = (i / self.ny, i % self.ny);
        Point::new(self.x_lo + ix as f64 * self.step, self.y_lo + iy as f64 * self.step)
    }

    pub fn gains(&self, i: usize) -> &[f64] {
        &self.gains[i * self.k..(i + 1) * self.k]
    }

    /// Index of the first node attaining the maximum of `score`.
    pub fn argmax<F>(&self, score: F) -> (usize, f64)
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.gains
            .par_chunks(self.k)
            .enumerate()
            .map(|(i, g)| (i, score(g)))
            .reduce(|| (usize::MAX, f64::NEG_INFINITY), better)
    }

    /// All nodes whose `value` is within `tie_tol` of the maximum, grouped by
    /// 8-neighbor adjacency (nodes closer than two grid steps merge). Each
    /// group is represented by its best node; groups come back in index order.
    pub fn clustered_maximizers<F>(&self, value: F, tie_tol: f64) -> Vec<(usize, f64)>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values: Vec<f64> = self.gains.par_chunks(self.k).map(&value).collect();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= best - tie_tol).collect();

        let slot: HashMap<usize, usize> = ties.iter().enumerate().map(|(s, &i)| (i, s)).collect();
        let mut parent: Vec<usize> = (0..ties.len()).collect();
        fn find(parent: &mut [usize], mut a: usize) -> usize {
            while parent[a] != a {
                parent[a] = parent[parent[a]];
                a = parent[a];
            }
            a
        }
        for (s, &i) in ties.iter().enumerate() {
            let (ix, iy) = ((i / self.ny) as i64, (i % self.ny) as i64);
            for (dx, dy) in [(-1, -1), (-1, 0), (-1, 1), (0, -1)] {
                let (jx, jy) = (ix + dx, iy + dy);
                if jx < 0 || jy < 0 || jy >= self.ny as i64 {
                    continue;
                }
                if let Some(&t) = slot.get(&(jx as usize * self.ny + jy as usize)) {
                    let (a, b) = (find(&mut parent, s), find(&mut parent, t));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut reps: HashMap<usize, (usize, f64)> = HashMap::new();
        for (s, &i) in ties.iter().enumerate() {
            let root = find(&mut parent, s);
            let cand = (i, values[i]);
            reps.entry(root).and_modify(|r| *r = better(*r, cand)).or_insert(cand);
        }
        let mut out: Vec<(usize, f64)> = reps.into_values().collect();
        out.sort_by_key(|r| r.0);
        out
    }
}

/// Larger value wins; equal values go to the smaller index.
fn better(a: (usize, f64), b: (usize, f64)) -> (usize, f64) {
    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
        b
    } else {
        a
    }
}
