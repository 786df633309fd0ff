//! Finite-horizon planners.
//!
//! The horizon is split into `N` slots. Starting from the best of several
//! simple trajectories, the planner alternates between a convexified
//! trajectory step and a convexified power step; every step is accepted only
//! if the true objective does not drop. In outage mode the result is then
//! turned into an on-off schedule by [`outage_postprocess`].

mod bounds;
mod init;
mod postprocess;
mod subproblems;

use std::io::{Read, Write};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::Serialize;

pub use bounds::{amplitude_lower_bound, square_sum_lower_bound, ScaAuxiliary};
pub use init::{init_direct, init_fly_hover_fly, init_successive_hover_fly, shortest_tour, InitKind, InitTrajectory};
pub use postprocess::{outage_postprocess, serve_top_slots, OutagePostResult, SlotSlack};
pub use subproblems::{power_subproblem, surrogate_objective, traj_subproblem, ScaStep};

use crate::convex::SolveConfig;
use crate::model::{evaluate_plan, rate_from_snr, DiscretePlan, Mode, ModelError, Point, Scenario};
use crate::relaxed::{solve_p11, solve_p21};
use crate::PlanError;

/// One row of the iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub round: usize,
    pub phase: String,
    pub objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScaTrace {
    pub rows: Vec<TraceRow>,
}

impl ScaTrace {
    fn push(&mut self, round: usize, phase: &str, objective: f64) {
        self.rows.push(TraceRow { round, phase: phase.to_string(), objective });
    }

    /// Surrogate objective after each step.
    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective).collect()
    }

    /// CSV with columns `round,phase,objective`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PlanError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Finite-horizon solver variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiniteSolver {
    /// Full alternating optimization from the best initialization.
    Sca,
    /// Fly-hover-fly path with optimized powers.
    InitFhf,
    /// Successive hover-and-fly path with optimized powers.
    InitShf,
    /// Straight path with optimized powers.
    InitDirect,
    /// Optimized path with every sensor at its average power.
    TrajOnly,
}

impl FiniteSolver {
    pub const ALL: [FiniteSolver; 5] =
        [FiniteSolver::Sca, FiniteSolver::InitFhf, FiniteSolver::InitShf, FiniteSolver::InitDirect, FiniteSolver::TrajOnly];

    pub fn label(self) -> &'static str {
        match self {
            FiniteSolver::Sca => "sca",
            FiniteSolver::InitFhf => "init-fhf",
            FiniteSolver::InitShf => "init-shf",
            FiniteSolver::InitDirect => "init-direct",
            FiniteSolver::TrajOnly => "traj-only",
        }
    }
}

impl std::str::FromStr for FiniteSolver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|v| v.label() == s).ok_or_else(|| format!("unknown finite-horizon solver `{s}`"))
    }
}

/// Output of a finite-horizon run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaOutcome {
    pub mode: Mode,
    pub solver: FiniteSolver,
    /// Plan to execute. In outage mode this is the post-processed schedule
    /// unless the solver skips post-processing.
    pub plan: DiscretePlan,
    /// Plan before post-processing.
    pub surrogate_plan: DiscretePlan,
    pub init_kind: InitKind,
    /// True objective of the selected starting plan (rate, or outage after
    /// post-processing).
    pub init_objective: f64,
    /// Average rate, or outage probability, of `plan`.
    pub objective: f64,
    pub trace: ScaTrace,
    pub rounds: usize,
    /// False when the round limit stopped the iteration.
    pub converged: bool,
    pub post: Option<OutagePostResult>,
    /// False when a hover tour came from the heuristic.
    pub tour_optimal: bool,
}

/// Repeats one kind of step until the relative gain drops below `sca_tol`.
fn ascend(
    plan: DiscretePlan,
    mode: Mode,
    scn: &Scenario,
    cfg: &SolveConfig,
    steps: &[(&str, StepFn)],
    trace: &mut ScaTrace,
) -> Result<(DiscretePlan, usize, bool), PlanError> {
    let mut plan = plan;
    let mut obj = surrogate_objective(&plan, mode, scn)?;
    trace.push(0, "init", obj);
    for round in 1..=cfg.sca_max_rounds {
        let start = obj;
        for (name, step) in steps {
            let s = step(&plan, mode, scn, cfg)?;
            if s.objective_after < obj - 1e-9 * obj.abs().max(1e-9) {
                return Err(PlanError::Solver(crate::SolverError::Numerical(format!("{name} step lowered the objective"))));
            }
            plan = s.plan;
            obj = s.objective_after;
            trace.push(round, name, obj);
        }
        let gain = (obj - start) / start.abs().max(1e-9);
        debug!("round {round}: objective {obj:.9} (relative gain {gain:.3e})");
        if gain < cfg.sca_tol {
            return Ok((plan, round, true));
        }
    }
    Ok((plan, cfg.sca_max_rounds, false))
}

type StepFn = fn(&DiscretePlan, Mode, &Scenario, &SolveConfig) -> Result<ScaStep, PlanError>;

const POWER_ONLY: &[(&str, StepFn)] = &[("power", power_subproblem)];
const TRAJ_ONLY: &[(&str, StepFn)] = &[("trajectory", traj_subproblem)];
const ALTERNATING: &[(&str, StepFn)] = &[("trajectory", traj_subproblem), ("power", power_subproblem)];

/// True objective in the ranking direction (higher is better).
fn score(plan: &DiscretePlan, mode: Mode, scn: &Scenario, cfg: &SolveConfig) -> Result<(f64, Option<OutagePostResult>), PlanError> {
    match mode {
        Mode::Rate => Ok((evaluate_plan(plan, scn).avg_rate, None)),
        Mode::Outage => {
            let post = outage_postprocess(plan, scn, cfg)?;
            Ok((-post.outage_prob, Some(post)))
        }
    }
}

struct Started {
    kind: InitKind,
    plan: DiscretePlan,
    score: f64,
    post: Option<OutagePostResult>,
    tour_optimal: bool,
}

fn power_design(t: &InitTrajectory, mode: Mode, scn: &Scenario, cfg: &SolveConfig) -> Result<Started, PlanError> {
    let start = t.with_powers(&scn.budgets());
    let (plan, _, _) = ascend(start, mode, scn, cfg, POWER_ONLY, &mut ScaTrace::default())?;
    let (score, post) = score(&plan, mode, scn, cfg)?;
    Ok(Started { kind: t.kind, plan, score, post, tour_optimal: t.tour_optimal })
}

fn pick_best(mut started: Vec<Started>) -> Started {
    // Stable: among equal scores the earliest kind wins.
    started.sort_by_key(|s| s.kind);
    started
        .into_iter()
        .reduce(|best, s| if s.score > best.score { s } else { best })
        .expect("at least one candidate")
}

/// Optimizes the powers on each candidate path and returns the best plan.
/// Candidates are evaluated in parallel; ties go to the kind order
/// successive hover-fly, fly-hover-fly, direct.
pub fn select_init(scn: &Scenario, candidates: &[InitTrajectory], mode: Mode, cfg: &SolveConfig) -> Result<(DiscretePlan, InitKind), PlanError> {
    let s = select(scn, candidates, mode, cfg)?;
    Ok((s.plan, s.kind))
}

fn select(scn: &Scenario, candidates: &[InitTrajectory], mode: Mode, cfg: &SolveConfig) -> Result<Started, PlanError> {
    if candidates.is_empty() {
        return Err(ModelError::Invalid("no initial trajectory".into()).into());
    }
    let started = candidates.par_iter().map(|t| power_design(t, mode, scn, cfg)).collect::<Result<Vec<_>, _>>()?;
    Ok(pick_best(started))
}

/// Initial paths that fit in the horizon. Paths that do not fit are skipped
/// unless none does.
fn candidate_paths(scn: &Scenario, mode: Mode, cfg: &SolveConfig, kinds: &[InitKind]) -> Result<Vec<InitTrajectory>, PlanError> {
    let mut out = Vec::new();
    let mut last_err = None;
    for &kind in kinds {
        let t = match kind {
            InitKind::Direct => init_direct(scn, cfg),
            InitKind::FlyHoverFly => init_fly_hover_fly(scn, cfg),
            InitKind::SuccessiveHoverFly => {
                let hover = match mode {
                    Mode::Rate => solve_p11(scn, cfg).map(|r| r.0),
                    Mode::Outage => solve_p21(scn, cfg).map(|r| r.0),
                };
                hover.and_then(|h| init_successive_hover_fly(scn, &h, cfg))
            }
        };
        match t {
            Ok(t) => out.push(t),
            Err(PlanError::Model(e @ (ModelError::InfeasibleHorizon { .. } | ModelError::Invalid(_)))) => {
                debug!("skipping {} initialization: {e}", kind.label());
                last_err = Some(PlanError::Model(e));
            }
            Err(e) => return Err(e),
        }
    }
    match (out.is_empty(), last_err) {
        (true, Some(e)) => Err(e),
        _ => Ok(out),
    }
}

const ALL_KINDS: [InitKind; 3] = [InitKind::SuccessiveHoverFly, InitKind::FlyHoverFly, InitKind::Direct];

/// Full alternating optimization.
pub fn sca_solve(scn: &Scenario, mode: Mode, cfg: &SolveConfig) -> Result<ScaOutcome, PlanError> {
    solve_finite(scn, mode, FiniteSolver::Sca, cfg)
}

/// Runs one of the finite-horizon solver variants.
pub fn solve_finite(scn: &Scenario, mode: Mode, solver: FiniteSolver, cfg: &SolveConfig) -> Result<ScaOutcome, PlanError> {
    cfg.validate()?;
    if cfg.n_slots == 0 {
        return Err(ModelError::Invalid("slot count must be positive".into()).into());
    }
    if mode == Mode::Outage {
        scn.require_gamma_min()?;
    }
    let kinds: &[InitKind] = match solver {
        FiniteSolver::Sca | FiniteSolver::TrajOnly => &ALL_KINDS,
        FiniteSolver::InitShf => &[InitKind::SuccessiveHoverFly],
        FiniteSolver::InitFhf => &[InitKind::FlyHoverFly],
        FiniteSolver::InitDirect => &[InitKind::Direct],
    };
    let paths = candidate_paths(scn, mode, cfg, kinds)?;

    if solver == FiniteSolver::TrajOnly {
        // Fixed average powers; the best starting path under those powers.
        let budgets = scn.budgets();
        let mut started: Vec<Started> = paths
            .iter()
            .map(|t| {
                let plan = t.with_powers(&budgets);
                let score = match mode {
                    Mode::Rate => evaluate_plan(&plan, scn).avg_rate,
                    Mode::Outage => -evaluate_plan(&plan, scn).require_outage()?,
                };
                Ok(Started { kind: t.kind, plan, score, post: None, tour_optimal: t.tour_optimal })
            })
            .collect::<Result<_, PlanError>>()?;
        started.sort_by_key(|s| s.kind);
        let best = pick_best(started);
        let mut trace = ScaTrace::default();
        let (plan, rounds, converged) = ascend(best.plan, mode, scn, cfg, TRAJ_ONLY, &mut trace)?;
        plan.check(scn)?;
        let m = evaluate_plan(&plan, scn);
        let objective = match mode {
            Mode::Rate => m.avg_rate,
            Mode::Outage => m.require_outage()?,
        };
        return Ok(ScaOutcome {
            mode,
            solver,
            surrogate_plan: plan.clone(),
            plan,
            init_kind: best.kind,
            init_objective: best.score.abs(),
            objective,
            trace,
            rounds,
            converged,
            post: None,
            tour_optimal: best.tour_optimal,
        });
    }

    let best = select(scn, &paths, mode, cfg)?;
    info!("starting from the {} path", best.kind.label());
    let init_objective = best.score.abs();
    let mut trace = ScaTrace::default();
    let (surrogate_plan, rounds, converged) = if solver == FiniteSolver::Sca {
        let r = ascend(best.plan.clone(), mode, scn, cfg, ALTERNATING, &mut trace)?;
        if !r.2 {
            warn!("alternating optimization stopped at the round limit ({})", cfg.sca_max_rounds);
        }
        r
    } else {
        trace.push(0, "init", surrogate_objective(&best.plan, mode, scn)?);
        (best.plan.clone(), 0, true)
    };
    surrogate_plan.check(scn)?;

    let (plan, objective, post) = match mode {
        Mode::Rate => {
            let r = evaluate_plan(&surrogate_plan, scn).avg_rate;
            (surrogate_plan.clone(), r, None)
        }
        Mode::Outage => {
            let mut post = outage_postprocess(&surrogate_plan, scn, cfg)?;
            // The starting plan's schedule is a valid fallback.
            if let Some(p0) = best.post.filter(|p0| p0.outage_prob < post.outage_prob) {
                debug!("post-processed starting plan beats the optimized one");
                post = p0;
            }
            post.plan.check(scn)?;
            (post.plan.clone(), post.outage_prob, Some(post))
        }
    };
    Ok(ScaOutcome {
        mode,
        solver,
        plan,
        surrogate_plan,
        init_kind: best.kind,
        init_objective,
        objective,
        trace,
        rounds,
        converged,
        post,
        tour_optimal: best.tour_optimal,
    })
}

/// Writes a plan with per-slot metrics: `n,t_s,x_m,y_m,p1_w…pK_w,snr_linear,
/// rate_bpshz,outage_flag`. The flag column is empty without a threshold.
pub fn write_plan_csv<W: Write>(plan: &DiscretePlan, scn: &Scenario, out: W) -> Result<(), PlanError> {
    let k = scn.num_sensors();
    let snr = evaluate_plan(plan, scn).per_slot_snr;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["n".to_string(), "t_s".into(), "x_m".into(), "y_m".into()];
    header.extend((1..=k).map(|i| format!("p{i}_w")));
    header.extend(["snr_linear".into(), "rate_bpshz".into(), "outage_flag".into()]);
    w.write_record(&header)?;
    for (i, (q, p)) in plan.waypoints.iter().zip(&plan.powers).enumerate() {
        let mut rec = vec![(i + 1).to_string(), ((i + 1) as f64 * plan.slot_len).to_string(), q.x.to_string(), q.y.to_string()];
        rec.extend(p.iter().map(|v| v.to_string()));
        rec.push(snr[i].to_string());
        rec.push(rate_from_snr(snr[i]).to_string());
        rec.push(scn.gamma_min().map_or(String::new(), |g| u8::from(snr[i] < g).to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_plan_csv`]. The metric columns are
/// ignored; they are recomputed from the scenario.
pub fn read_plan_csv<R: Read>(input: R, scn: &Scenario) -> Result<DiscretePlan, PlanError> {
    let k = scn.num_sensors();
    let mut r = csv::Reader::from_reader(input);
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| PlanError::Io(format!("bad number `{s}`: {e}")));
    let mut waypoints = Vec::new();
    let mut powers = Vec::new();
    let mut slot_len = None;
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != k + 7 {
            return Err(PlanError::Io(format!("expected {} columns, found {}", k + 7, rec.len())));
        }
        if slot_len.is_none() {
            slot_len = Some(parse(&rec[1])? / parse(&rec[0])?);
        }
        waypoints.push(Point::new(parse(&rec[2])?, parse(&rec[3])?));
        powers.push((0..k).map(|i| parse(&rec[4 + i])).collect::<Result<Vec<_>, _>>()?);
    }
    let slot_len = slot_len.ok_or_else(|| PlanError::Io("plan file has no slots".into()))?;
    Ok(DiscretePlan { slot_len, waypoints, powers })
}
