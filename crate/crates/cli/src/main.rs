//! `isoflow` command-line tool.
//!
//! Exit status: 0 success, 1 a checked identity failed, 2 invalid input,
//! 3 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod error;
mod output;
mod source;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Simulate(a) => commands::simulate(a, cli.degrees).map(|_| true),
        Command::ClosedForm(a) => commands::closed_form(a, cli.degrees).map(|_| true),
        Command::Minimal(a) => commands::minimal(a).map(|_| true),
        Command::Check(a) => commands::check(a, cli.degrees),
        Command::Catalog { action } => commands::catalog_cmd(action).map(|_| true),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(error::CliError::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isoflow: {e}");
            e.exit_code()
        }
    }
}
