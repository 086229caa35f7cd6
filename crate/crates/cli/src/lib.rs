//! Command-line harness for the radial flows and the check suite:
//! `run-flow`, `verify`, `sweep` and `report`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use clap::Parser;

pub use commands::{cmd_report, cmd_run_flow, cmd_sweep, cmd_verify, dispatch, verify_report, SuiteReport, Tally};
pub use config::{default_flow, split_tolerance_flags, Cli, Command, RunConfig, SweepAxis};
pub use error::{CliError, Result};

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn run(args: Vec<String>) -> i32 {
    let (rest, tols) = match split_tolerance_flags(args) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(rest) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = RunConfig::resolve(&cli.command, &tols).and_then(|cfg| dispatch(&cfg));
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
