//! Command-line front end of the blow-up toolkit: configuration, run directories and the
//! `simulate`, `functionals`, `verify`, `rate` and `sweep` commands.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod rundir;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use crate::error::{exit, CliError, Result};

/// Parsed command line.
#[derive(Debug, Parser)]
#[command(name = "blowup", version, about = "Blow-up rate experiments for u_tt = Δu + |u|^(p-1)u")]
pub struct Cli {
    /// Print every individual check.
    #[arg(long, global = true)]
    pub verbose: bool,
    /// Command to run.
    #[command(subcommand)]
    pub command: Command,
}

/// Configuration and run-directory selection shared by the commands.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Configuration file (TOML); defaults apply to every missing field.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Run directory; defaults to `$BLOWUP_OUT_ROOT/run-<config hash>` (root `runs`).
    #[arg(long, alias = "run", value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Pohozaev-type integral identities on seeded random test fields (no run needed).
    Identities,
    /// Derivative lemmas with a refinement study against a companion run.
    Lemmas,
    /// Lyapunov ladder monotonicity and the sign of `F₀`.
    Monotone,
    /// Decay and boundedness of the weighted quantities.
    Decay,
    /// Every suite.
    All,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the configured initial data until blow-up and persist the trajectory.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Also write every stored state as `raw.csv` (t, r, u, ut).
        #[arg(long)]
        dump_raw: bool,
    },
    /// Evaluate the selected functionals along the stored trajectory.
    Functionals {
        #[command(flatten)]
        run: RunArgs,
        /// Functional names, replacing the configured selection.
        #[arg(long, value_delimiter = ',')]
        names: Vec<String>,
        /// Weight exponents, replacing the configured list.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// Also write the sampled similarity fields as `snapshots.csv`.
        #[arg(long)]
        export_snapshots: bool,
    },
    /// Run a verification suite and write JSON and text reports.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Suite to run.
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Evaluate the blow-up rate quantities and their decay trend.
    Rate {
        #[command(flatten)]
        run: RunArgs,
        /// Log-weight exponent, replacing the configured value.
        #[arg(long)]
        q: Option<f64>,
    },
    /// Run a template configuration over a grid of `(p, N)` pairs.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Nonlinearity exponents.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        /// Space dimensions.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Maximal number of concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
