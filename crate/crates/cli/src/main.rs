//! `fbrelay`: outage evaluation, sweeps, power-split optimization, reliability
//! regions and oracle validation from the command line.
//!
//! Exit codes: 0 success, 1 validation failure, 2 bad input, 3 numeric
//! failure. `FBRELAY_THREADS` caps the worker pool.

mod commands;
mod config;
mod error;
mod output;
mod validate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "fbrelay", version, about = "Finite-blocklength outage of DT, DF, SC and MRC relaying")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Outage of one configuration.
    Outage(commands::OutageArgs),
    /// Outage along one parameter axis.
    Sweep(commands::SweepArgs),
    /// Best power split between source and relay.
    OptimizeEta(commands::OptimizeArgs),
    /// Success probability over a (k, n) grid.
    Region(commands::RegionArgs),
    /// Check closed forms against the quadrature and Monte Carlo oracles.
    Validate(validate::ValidateArgs),
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("FBRELAY_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Input(format!("FBRELAY_THREADS: expected a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("FBRELAY_THREADS: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Outage(a) => commands::outage(&a),
        Command::Sweep(a) => commands::sweep_cmd(&a),
        Command::OptimizeEta(a) => commands::optimize(&a),
        Command::Region(a) => commands::region(&a),
        Command::Validate(a) => validate::validate(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
