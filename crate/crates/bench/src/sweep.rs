//! Parameter sweeps with a bounded worker pool.

use std::io::Write;
use std::path::PathBuf;

use beamtraj::model::ScenarioFile;
use beamtraj::{Mode, SolveConfig};
use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::run::{read_scenario, solve};
use crate::{Overrides, RunError, Solver, WORKERS_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Mission duration in seconds.
    Horizon,
    /// Every sensor's average power budget in dBm.
    Pavg,
}

impl SweepParam {
    pub fn label(self) -> &'static str {
        match self {
            SweepParam::Horizon => "horizon_s",
            SweepParam::Pavg => "p_avg_dbm",
        }
    }

    fn apply(self, base: &ScenarioFile, value: f64) -> ScenarioFile {
        let mut f = base.clone();
        match self {
            SweepParam::Horizon => f.uav.horizon_s = value,
            SweepParam::Pavg => f.sensors.iter_mut().for_each(|s| s.p_avg_dbm = value),
        }
        f
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "horizon" | "horizon_s" => Ok(SweepParam::Horizon),
            "pavg" | "p_avg_dbm" => Ok(SweepParam::Pavg),
            _ => Err(format!("unknown sweep parameter `{s}` (expected horizon or pavg)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub scenario: PathBuf,
    pub mode: Mode,
    /// The relaxed bound is always added as the reference series.
    pub solvers: Vec<Solver>,
    pub overrides: Overrides,
}

/// One cell of a sweep. Failed cells keep the error text.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: &'static str,
    pub value: f64,
    pub mode: Mode,
    pub solver: &'static str,
    pub objective: Option<f64>,
    pub error: Option<String>,
}

fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn cell(base: &ScenarioFile, spec: &SweepSpec, value: f64, solver: Solver, cfg: &SolveConfig) -> SweepRow {
    let file = spec.param.apply(base, value);
    let result = solve(&file, spec.mode, solver, cfg);
    if let Err(e) = &result {
        warn!("{} = {value}, {solver}: {e}", spec.param.label());
    }
    SweepRow {
        param: spec.param.label(),
        value,
        mode: spec.mode,
        solver: solver.label(),
        objective: result.as_ref().ok().map(|s| s.objective),
        error: result.err().map(|e| format!("{}: {e}", e.category())),
    }
}

/// Runs every solver at every value. Rows come back sorted by value, then
/// solver name, whatever order the workers finish in.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, RunError> {
    if spec.values.is_empty() {
        return Err(RunError::Config("sweep needs at least one value".into()));
    }
    if spec.values.iter().any(|v| !v.is_finite()) {
        return Err(RunError::Config("sweep values must be finite".into()));
    }
    let cfg = spec.overrides.config()?;
    let (base, _) = read_scenario(&spec.scenario)?;
    let mut solvers = spec.solvers.clone();
    if !solvers.contains(&Solver::Relaxed) {
        solvers.push(Solver::Relaxed);
    }
    solvers.sort();
    solvers.dedup();
    let mut values = spec.values.clone();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let cells: Vec<(f64, Solver)> = values.iter().flat_map(|&v| solvers.iter().map(move |&s| (v, s))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| RunError::Io(format!("cannot start worker pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| cells.par_iter().map(|&(v, s)| cell(&base, spec, v, s, &cfg)).collect());
    rows.sort_by(|a, b| a.value.total_cmp(&b.value).then_with(|| a.solver.cmp(b.solver)));
    Ok(rows)
}

/// Long-format CSV: `param,value,mode,solver,objective,error`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["param", "value", "mode", "solver", "objective", "error"]).map_err(|e| RunError::Io(e.to_string()))?;
    for r in rows {
        let rec = [
            r.param.to_string(),
            r.value.to_string(),
            r.mode.to_string(),
            r.solver.to_string(),
            r.objective.map_or(String::new(), |v| v.to_string()),
            r.error.clone().unwrap_or_default(),
        ];
        w.write_record(&rec).map_err(|e| RunError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
