//! Initial trajectories for the alternating optimization.

use itertools::Itertools;
use serde::Serialize;

use crate::convex::SolveConfig;
use crate::model::{DiscretePlan, ModelError, Point, Scenario};
use crate::relaxed::{HoverPlan, LocationGrid};
use crate::PlanError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum InitKind {
    /// Visit the relaxed plan's hover points in tour order.
    SuccessiveHoverFly,
    /// Fly to the best single location, hover, fly to the end.
    FlyHoverFly,
    /// Straight line at constant speed.
    Direct,
}

impl InitKind {
    pub fn label(self) -> &'static str {
        match self {
            InitKind::SuccessiveHoverFly => "shf",
            InitKind::FlyHoverFly => "fhf",
            InitKind::Direct => "direct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitTrajectory {
    pub kind: InitKind,
    pub slot_len: f64,
    /// One waypoint per slot, sampled at the end of each slot.
    pub waypoints: Vec<Point>,
    /// Hover locations in visiting order.
    pub hover_points: Vec<Point>,
    pub hover_durations: Vec<f64>,
    pub fly_time: f64,
    /// False when the visiting order came from the heuristic.
    pub tour_optimal: bool,
}

impl InitTrajectory {
    /// Plan with the same power vector in every slot.
    pub fn with_powers(&self, powers: &[f64]) -> DiscretePlan {
        DiscretePlan {
            slot_len: self.slot_len,
            waypoints: self.waypoints.clone(),
            powers: vec![powers.to_vec(); self.waypoints.len()],
        }
    }
}

/// Relative speed margin that keeps the speed constraints strictly slack.
const SPEED_MARGIN: f64 = 1e-9;

enum Leg {
    Fly { from: Point, to: Point, duration: f64 },
    Hover { at: Point, duration: f64 },
}

/// Piecewise path; samples `q(nδ)` for `n = 1..N` and pins the last sample
/// to the final location.
fn sample(legs: &[Leg], scn: &Scenario, n: usize) -> Vec<Point> {
    let delta = scn.horizon() / n as f64;
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut t = i as f64 * delta;
        let mut q = scn.q_final();
        for leg in legs {
            let (d, end) = match *leg {
                Leg::Fly { to, duration, .. } => (duration, to),
                Leg::Hover { at, duration } => (duration, at),
            };
            if t <= d {
                q = match *leg {
                    Leg::Fly { from, to, duration } if duration > 0.0 => from.lerp(to, t / duration),
                    Leg::Fly { to, .. } => to,
                    Leg::Hover { at, .. } => at,
                };
                break;
            }
            t -= d;
            q = end;
        }
        out.push(q);
    }
    if let Some(last) = out.last_mut() {
        *last = scn.q_final();
    }
    out
}

/// Flight speed and total flying time for a path of length `len`.
fn fly_speed(len: f64, scn: &Scenario) -> Result<(f64, f64), ModelError> {
    let v = scn.v_max();
    let fast = v * (1.0 - SPEED_MARGIN);
    if len / fast <= scn.horizon() {
        Ok((fast, len / fast))
    } else if len / v <= scn.horizon() * (1.0 + 1e-12) {
        Ok((v, (len / v).min(scn.horizon())))
    } else {
        Err(ModelError::InfeasibleHorizon { min_s: len / v, horizon_s: scn.horizon() })
    }
}

/// Hover-and-fly path through `points` with hover times proportional to
/// `weights`.
fn hover_path(scn: &Scenario, points: &[Point], weights: &[f64], n: usize) -> Result<(Vec<Point>, Vec<f64>, f64), ModelError> {
    let mut stops = vec![scn.q_init()];
    stops.extend_from_slice(points);
    stops.push(scn.q_final());
    let len: f64 = stops.windows(2).map(|w| w[0].dist(w[1])).sum();
    let (speed, fly) = fly_speed(len, scn)?;
    let hover_total = (scn.horizon() - fly).max(0.0);
    let wsum: f64 = weights.iter().sum();
    let durations: Vec<f64> = if wsum > 0.0 {
        weights.iter().map(|w| hover_total * w / wsum).collect()
    } else {
        vec![hover_total / points.len().max(1) as f64; points.len()]
    };
    let mut legs = Vec::new();
    for (i, w) in stops.windows(2).enumerate() {
        legs.push(Leg::Fly { from: w[0], to: w[1], duration: w[0].dist(w[1]) / speed });
        if i < points.len() {
            legs.push(Leg::Hover { at: points[i], duration: durations[i] });
        }
    }
    Ok((sample(&legs, scn, n), durations, fly))
}

/// Fly–hover–fly through the grid location with the best SNR under the
/// average powers.
pub fn init_fly_hover_fly(scn: &Scenario, cfg: &SolveConfig) -> Result<InitTrajectory, PlanError> {
    let grid = LocationGrid::new(scn, cfg.grid_step_m);
    let budgets = scn.budgets();
    let (i, _) = grid.argmax(|g| g.iter().zip(&budgets).map(|(g, p)| (g * p).sqrt()).sum());
    let fix = grid.point(i);
    let n = cfg.n_slots;
    let (waypoints, durations, fly) = hover_path(scn, &[fix], &[1.0], n)?;
    Ok(InitTrajectory {
        kind: InitKind::FlyHoverFly,
        slot_len: scn.horizon() / n as f64,
        waypoints,
        hover_points: vec![fix],
        hover_durations: durations,
        fly_time: fly,
        tour_optimal: true,
    })
}

fn tour_length(scn: &Scenario, points: &[Point], order: &[usize]) -> f64 {
    let mut len = 0.0;
    let mut prev = scn.q_init();
    for &i in order {
        len += prev.dist(points[i]);
        prev = points[i];
    }
    len + prev.dist(scn.q_final())
}

/// Shortest open tour from `q_init` through every point to `q_final`.
/// Returns the order and whether it is provably optimal.
pub fn shortest_tour(scn: &Scenario, points: &[Point], exhaustive_limit: usize) -> (Vec<usize>, bool) {
    let v = points.len();
    if v <= exhaustive_limit {
        // Permutations come in lexicographic order; the first shortest wins.
        let mut best: Option<(f64, Vec<usize>)> = None;
        for perm in (0..v).permutations(v) {
            let len = tour_length(scn, points, &perm);
            if best.as_ref().is_none_or(|(b, _)| len < *b) {
                best = Some((len, perm));
            }
        }
        return (best.map(|b| b.1).unwrap_or_default(), true);
    }
    // Nearest neighbor, then 2-opt until no reversal helps.
    let mut order = Vec::with_capacity(v);
    let mut left: Vec<usize> = (0..v).collect();
    let mut at = scn.q_init();
    while !left.is_empty() {
        let j = (0..left.len())
            .min_by(|&a, &b| at.dist(points[left[a]]).total_cmp(&at.dist(points[left[b]])))
            .expect("nonempty");
        let p = left.remove(j);
        at = points[p];
        order.push(p);
    }
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..v {
            for j in i + 1..v {
                let mut cand = order.clone();
                cand[i..=j].reverse();
                if tour_length(scn, points, &cand) < tour_length(scn, points, &order) - 1e-12 {
                    order = cand;
                    improved = true;
                }
            }
        }
    }
    (order, false)
}

/// Successive hover-and-fly through the hover points of a relaxed plan.
pub fn init_successive_hover_fly(scn: &Scenario, hover: &HoverPlan, cfg: &SolveConfig) -> Result<InitTrajectory, PlanError> {
    let pts: Vec<&crate::relaxed::HoverPoint> = hover.points.iter().filter(|p| p.duration > 0.0).collect();
    if pts.is_empty() {
        return Err(PlanError::Model(ModelError::Invalid("relaxed plan has no hover points".into())));
    }
    let locations: Vec<Point> = pts.iter().map(|p| p.location).collect();
    let (order, optimal) = shortest_tour(scn, &locations, cfg.tsp_exhaustive_limit);
    let points: Vec<Point> = order.iter().map(|&i| locations[i]).collect();
    let weights: Vec<f64> = order.iter().map(|&i| pts[i].duration).collect();
    let n = cfg.n_slots;
    let (waypoints, durations, fly) = hover_path(scn, &points, &weights, n)?;
    Ok(InitTrajectory {
        kind: InitKind::SuccessiveHoverFly,
        slot_len: scn.horizon() / n as f64,
        waypoints,
        hover_points: points,
        hover_durations: durations,
        fly_time: fly,
        tour_optimal: optimal,
    })
}

/// Straight line from start to end at constant speed.
pub fn init_direct(scn: &Scenario, cfg: &SolveConfig) -> Result<InitTrajectory, PlanError> {
    let n = cfg.n_slots;
    let (a, b) = (scn.q_init(), scn.q_final());
    let mut waypoints: Vec<Point> = (1..=n).map(|i| a.lerp(b, i as f64 / n as f64)).collect();
    *waypoints.last_mut().expect("n ≥ 1") = b;
    Ok(InitTrajectory {
        kind: InitKind::Direct,
        slot_len: scn.horizon() / n as f64,
        waypoints,
        hover_points: Vec::new(),
        hover_durations: Vec::new(),
        fly_time: scn.horizon(),
        tour_optimal: true,
    })
}
