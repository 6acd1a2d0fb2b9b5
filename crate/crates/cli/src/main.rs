//! `heston-dg`: prices the test problems, reproduces the comparison tables
//! and dumps surfaces, meshes and error indicators as CSV.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(version, about = "SIPG discontinuous Galerkin pricer for the Heston model")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct Global {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Overrides one configuration key, e.g. `--set params.kappa=2.0`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Seed of the Monte Carlo generator.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Writes the CSV here instead of standard output.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// PDE, semi-analytic and Monte Carlo prices at (v0, S0).
    Price {
        /// Skips the Monte Carlo estimate.
        #[arg(long)]
        no_mc: bool,
    },
    /// European call errors for the five comparison strikes.
    Table2 {
        /// Polynomial degree (1 or 2).
        #[arg(long, default_value_t = 1)]
        degree: usize,
        /// Fails unless every error is within three times the published one.
        #[arg(long)]
        check: bool,
    },
    /// Digital call values with plain and Rannacher-smoothed Crank-Nicolson.
    Table5 {
        /// Meshes as `NVxNX`, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "8x16,16x64,32x128,64x256")]
        meshes: Vec<String>,
        /// Fails unless Rannacher stays within 5e-3 on 32x128 and 64x256
        /// while plain CN exceeds 5e-2 on one of them.
        #[arg(long)]
        check: bool,
    },
    /// Samples the solution at the given times to maturity on a lattice.
    Surface {
        /// Times to maturity; must be multiples of the time step.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        tau: Vec<f64>,
        /// Lattice size `NVxNX`.
        #[arg(long, default_value = "41x81")]
        grid: String,
    },
    /// Runs the adaptive loop and prints one row per round.
    Adapt {
        /// Writes the final mesh (vertex and triangle tables).
        #[arg(long, value_name = "FILE")]
        mesh_out: Option<PathBuf>,
        /// Writes the final error indicators.
        #[arg(long, value_name = "FILE")]
        indicators_out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
