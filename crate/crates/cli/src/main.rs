//! `screwkin`: kinematic analyses of linkage models from the command line.
//!
//! Reports go to stdout as JSON; warnings and errors go to stderr. Exit
//! codes: 0 success, 2 invalid input, 3 numeric failure.

mod commands;
mod error;
mod inputs;
mod model;
mod report;

use clap::Parser;
use screwkin::Tolerances;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "screwkin", version, about = "Higher-order screw kinematics of serial and closed-loop linkages")]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Tolerances::from_env()
        .map_err(error::CliError::from)
        .and_then(|tol| commands::run(&cli.command, &tol).and_then(|r| Ok((r.to_value(&tol)?, r.diagnostics.warnings))));
    match result {
        Ok((value, warnings)) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", report::render(&value));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("screwkin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
