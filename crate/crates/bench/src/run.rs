//! Single planner runs.

use std::fs;
use std::path::{Path, PathBuf};

use beamtraj::model::{evaluate_plan, ScenarioFile};
use beamtraj::relaxed::{solve_p11, solve_p21};
use beamtraj::sca::{solve_finite, write_plan_csv};
use beamtraj::{Mode, PlanError, SolveConfig};
use log::info;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{Overrides, RunError, Solver};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRequest {
    pub mode: Mode,
    pub solver: Solver,
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// Average rate or outage probability of the written plan.
    pub objective: f64,
    pub files: Vec<PathBuf>,
}

/// Scenario file contents, parsed, with their SHA-256.
pub(crate) fn read_scenario(path: &Path) -> Result<(ScenarioFile, String), RunError> {
    let bytes = fs::read(path).map_err(|e| RunError::Config(format!("cannot read scenario {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| RunError::Config(format!("scenario is not UTF-8: {e}")))?;
    let file = ScenarioFile::from_json(text).map_err(|e| RunError::Config(e.to_string()))?;
    Ok((file, hex::encode(Sha256::digest(&bytes))))
}

/// Files produced by one solve, still in memory.
pub(crate) struct Solved {
    pub objective: f64,
    pub files: Vec<(&'static str, Vec<u8>)>,
    pub metrics: Value,
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), PlanError>) -> Result<Vec<u8>, RunError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub(crate) fn solve(file: &ScenarioFile, mode: Mode, solver: Solver, cfg: &SolveConfig) -> Result<Solved, RunError> {
    let scn = file.load().map_err(|e| RunError::Config(e.to_string()))?;
    if mode == Mode::Outage && scn.gamma_min().is_none() {
        return Err(RunError::Config("outage mode needs gamma_min_db in the scenario".into()));
    }
    match solver {
        Solver::Relaxed => {
            let (plan, report) = match mode {
                Mode::Rate => solve_p11(&scn, cfg)?,
                Mode::Outage => solve_p21(&scn, cfg)?,
            };
            let metrics = json!({
                "mode": mode,
                "solver": solver.label(),
                "objective": plan.objective,
                "dual_value": report.dual_value,
                "duality_gap": (plan.objective - report.dual_value).abs(),
                "dual_iterations": report.iterations,
                "dual_converged": report.converged,
                "outage_case": report.case,
                "hover_points": plan.points.len(),
                "outage_duration_s": plan.outage_duration,
            });
            let files = vec![
                ("plan.csv", csv_bytes(|b| plan.write_csv(b))?),
                ("dual.json", report.to_json().into_bytes()),
            ];
            Ok(Solved { objective: plan.objective, files, metrics })
        }
        Solver::Finite(f) => {
            let out = solve_finite(&scn, mode, f, cfg)?;
            let m = evaluate_plan(&out.plan, &scn);
            let metrics = json!({
                "mode": mode,
                "solver": solver.label(),
                "objective": out.objective,
                "avg_rate_bpshz": m.avg_rate,
                "outage_prob": m.outage_prob,
                "init_kind": out.init_kind.label(),
                "init_objective": out.init_objective,
                "rounds": out.rounds,
                "converged": out.converged,
                "tour_optimal": out.tour_optimal,
                "n_slots": out.plan.n_slots(),
                "served_slots": out.post.as_ref().map(|p| p.n_served),
            });
            let mut files = vec![
                ("plan.csv", csv_bytes(|b| write_plan_csv(&out.plan, &scn, b))?),
                ("trace.csv", csv_bytes(|b| out.trace.write_csv(b))?),
            ];
            if out.post.is_some() {
                files.push(("surrogate_plan.csv", csv_bytes(|b| write_plan_csv(&out.surrogate_plan, &scn, b))?));
            }
            Ok(Solved { objective: out.objective, files, metrics })
        }
    }
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}

/// Solves and writes `plan.csv`, `metrics.json`, solver-specific files and
/// `manifest.json` into `req.out`. Nothing is written unless the solve
/// succeeds.
pub fn run(req: &RunRequest) -> Result<RunSummary, RunError> {
    let cfg = req.overrides.config()?;
    let (file, digest) = read_scenario(&req.scenario)?;
    let solved = solve(&file, req.mode, req.solver, &cfg)?;
    info!("{} {}: objective {}", req.mode, req.solver, solved.objective);

    let mut outputs = solved.files;
    outputs.push(("metrics.json", pretty(&solved.metrics)));
    let names: Vec<&str> = outputs.iter().map(|(n, _)| *n).collect();
    let manifest = json!({
        "tool": "beamtraj",
        "version": env!("CARGO_PKG_VERSION"),
        "command": "plan",
        "mode": req.mode,
        "solver": req.solver.label(),
        "scenario": req.scenario.display().to_string(),
        "scenario_sha256": digest,
        "overrides": req.overrides,
        "config": cfg,
        "outputs": names,
    });
    outputs.push(("manifest.json", pretty(&manifest)));

    fs::create_dir_all(&req.out)?;
    let mut files = Vec::with_capacity(outputs.len());
    for (name, bytes) in outputs {
        let path = req.out.join(name);
        fs::write(&path, bytes)?;
        files.push(path);
    }
    Ok(RunSummary { objective: solved.objective, files })
}
