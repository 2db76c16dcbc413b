//! `ozf`: certify nonexistence of suitable O'Shea-Zames-Falb multipliers,
//! verify candidates, compute interval thresholds and simulate the Lurye loop.
//!
//! Exit codes: 0 = analysis completed (including "no violation"),
//! 1 = input error, 2 = phase-check found a violation certificate.

mod commands;
mod io;
mod sweep;

use clap::Parser;
use std::process::ExitCode;

use commands::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = commands::init_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match commands::run(cli) {
        Ok(found_violation) => {
            if found_violation {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
