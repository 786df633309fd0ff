use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use beamtraj::Mode;
use beamtraj_bench::{run, sweep, write_sweep_csv, Overrides, RunError, RunRequest, Solver, SweepParam, SweepSpec};
use clap::{Args, Parser, Subcommand};

/// Plans UAV trajectories and sensor powers for beamformed data collection.
#[derive(Parser)]
#[command(name = "beamtraj", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write the plan, metrics and a run manifest.
    Plan {
        /// relaxed, sca, init-fhf, init-shf, init-direct or traj-only.
        #[arg(long, value_parser = parse::<Solver>)]
        solver: Solver,
        #[command(flatten)]
        common: Common,
    },
    /// Solve a scenario over a list of parameter values.
    Sweep {
        /// Parameter to vary: `horizon` (s) or `pavg` (dBm, all sensors).
        #[arg(long, value_parser = parse::<SweepParam>)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Comma-separated solvers; the relaxed bound is always included.
        #[arg(long, value_delimiter = ',', value_parser = parse::<Solver>, default_value = "sca")]
        solvers: Vec<Solver>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// rate or outage.
    #[arg(long, value_parser = parse::<Mode>)]
    mode: Mode,
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Location grid spacing in meters.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Number of time slots for the finite-horizon solvers.
    #[arg(long)]
    slots: Option<usize>,
    /// Relative optimality tolerance of the convex solvers.
    #[arg(long)]
    tol: Option<f64>,
    /// Round limit of the alternating optimization.
    #[arg(long)]
    max_rounds: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { grid_step: self.grid_step, slots: self.slots, tol: self.tol, max_rounds: self.max_rounds }
    }
}

fn parse<T: std::str::FromStr<Err = impl std::fmt::Display>>(s: &str) -> Result<T, String> {
    s.parse::<T>().map_err(|e| e.to_string())
}

fn execute(cmd: Command) -> Result<(), RunError> {
    match cmd {
        Command::Plan { solver, common } => {
            let req = RunRequest {
                mode: common.mode,
                solver,
                overrides: common.overrides(),
                scenario: common.scenario,
                out: common.out,
            };
            let summary = run(&req)?;
            println!("objective {}", summary.objective);
            for f in summary.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep { param, values, solvers, common } => {
            let spec = SweepSpec {
                param,
                values,
                mode: common.mode,
                solvers,
                overrides: common.overrides(),
                scenario: common.scenario,
            };
            let rows = sweep(&spec)?;
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            fs::create_dir_all(&common.out)?;
            let path = common.out.join("sweep.csv");
            fs::write(&path, buf)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("{} cells, {failed} failed; wrote {}", rows.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.category(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
