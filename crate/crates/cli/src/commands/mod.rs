//! Command implementations. Each command works inside one run directory and records what it
//! writes in the directory's manifest.

mod functionals;
mod rate;
mod simulate;
mod sweep;
mod verify;

use std::path::PathBuf;

use blowup_core::solver::Trajectory;

use crate::config::RunConfig;
use crate::error::Result;
use crate::rundir::{default_run_dir, RunDir, MANIFEST};
use crate::{Cli, Command, RunArgs};

pub use functionals::{functionals_into, FunctionalsIndex};
pub use rate::rate_into;
pub use simulate::{simulate_into, SimulationSummary};
pub use sweep::{sweep, SweepRow, SWEEP_CSV};
pub use verify::{verify_into, SuiteOutcome};

/// Name of the persisted trajectory.
pub const TRAJECTORY_JSON: &str = "trajectory.json";

/// Runs the parsed command and returns its exit code.
pub fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Simulate { run, dump_raw } => {
            let cfg = load_config(run)?;
            let dir = run.out.clone().unwrap_or_else(|| default_run_dir(&cfg));
            let mut rd = RunDir::create(&dir, &cfg)?;
            let summary = simulate_into(&mut rd, &cfg, *dump_raw)?;
            println!("{}", summary.line());
            println!("run directory: {}", dir.display());
            Ok(summary.exit_code())
        }
        Command::Functionals { run, names, eps, export_snapshots } => {
            let (mut rd, mut cfg) = open_run(run)?;
            if !names.is_empty() {
                cfg.functionals.names = names.clone();
            }
            if !eps.is_empty() {
                cfg.functionals.eps = eps.clone();
            }
            let index = functionals_into(&mut rd, &cfg, *export_snapshots)?;
            println!("{} series over s in [{:.4}, {:.4}] written to {}", index.series.len(), index.s_first, index.s_last, rd.root().display());
            for (name, why) in &index.skipped {
                println!("skipped {name}: {why}");
            }
            Ok(crate::exit::OK)
        }
        Command::Verify { run, suite } => {
            let (mut rd, cfg) = open_or_create_for_static(run, *suite)?;
            let outcomes = verify_into(&mut rd, &cfg, *suite)?;
            let mut failed = false;
            for o in &outcomes {
                if cli.verbose {
                    for line in &o.lines {
                        println!("{line}");
                    }
                }
                println!("{}", o.line());
                failed |= !o.pass;
            }
            Ok(if failed { crate::exit::CHECK_FAILED } else { crate::exit::OK })
        }
        Command::Rate { run, q } => {
            let (mut rd, cfg) = open_run(run)?;
            let q = q.unwrap_or(cfg.functionals.q);
            let report = rate_into(&mut rd, &cfg, q)?;
            println!(
                "{} rate: slope {:.5} vs expected {:.5} (tol {:.0}%), cone integral {}",
                if report.pass { "PASS" } else { "FAIL" },
                report.fitted_slope,
                report.expected_slope,
                100.0 * report.slope_tolerance,
                if report.cone_bounded { "bounded" } else { "not bounded" }
            );
            Ok(if report.pass { crate::exit::OK } else { crate::exit::CHECK_FAILED })
        }
        Command::Sweep { run, p, n, jobs } => {
            let cfg = load_config(run)?;
            let root = run.out.clone().unwrap_or_else(|| default_run_dir(&cfg));
            let rows = sweep(&cfg, &root, p, n, *jobs, cli.verbose)?;
            let all_pass = rows.iter().all(SweepRow::pass);
            println!("{} runs summarised in {}", rows.len(), root.join(SWEEP_CSV).display());
            Ok(if all_pass { crate::exit::OK } else { crate::exit::CHECK_FAILED })
        }
    }
}

/// Configuration from `--config` (or the defaults) with the `--seed` override applied.
pub fn load_config(run: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &run.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn target_dir(run: &RunArgs) -> Result<PathBuf> {
    match &run.out {
        Some(dir) => Ok(dir.clone()),
        None => Ok(default_run_dir(&load_config(run)?)),
    }
}

/// Opens the run directory named by `--out` (or derived from `--config`) and its echoed
/// configuration, with the `--seed` override applied.
pub fn open_run(run: &RunArgs) -> Result<(RunDir, RunConfig)> {
    let rd = RunDir::open(&target_dir(run)?)?;
    let mut cfg = rd.config()?;
    if let Some(seed) = run.seed {
        cfg.seed = seed;
    }
    Ok((rd, cfg))
}

fn open_or_create_for_static(run: &RunArgs, suite: crate::Suite) -> Result<(RunDir, RunConfig)> {
    let dir = target_dir(run)?;
    if suite == crate::Suite::Identities && !dir.join(MANIFEST).is_file() {
        let cfg = load_config(run)?;
        return Ok((RunDir::create(&dir, &cfg)?, cfg));
    }
    open_run(run)
}

/// The trajectory persisted by `simulate`.
pub fn load_trajectory(rd: &RunDir) -> Result<Trajectory> {
    rd.read_json(TRAJECTORY_JSON)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

