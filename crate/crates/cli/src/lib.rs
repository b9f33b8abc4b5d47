//! Command-line front end for `mbar-core`: file formats, subcommands and
//! report rendering.

// Negated comparisons reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod output;

use std::io::Write;

use args::{Cli, Command};
use commands::Diagnostics;
pub use error::CliError;
use output::Report;

/// Runs one parsed invocation and returns its report.
pub fn execute(cli: &Cli, diag: &mut Diagnostics) -> Result<Report, CliError> {
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a, diag),
        Command::Estimate(a) => commands::estimate(a, diag),
        Command::Simulate(a) => commands::simulate(a, diag),
        Command::Compare(a) => commands::compare(a, diag),
        Command::Sensitivity(a) => commands::sensitivity(a, diag),
        Command::Rankcurves(a) => commands::rankcurves(a, diag),
        Command::Rank(a) => commands::rank(a, diag),
        Command::Transfer(a) => commands::transfer(a, diag),
    }
}

/// Executes, writes the report to `--out` or `stdout`, and returns the exit
/// code. Warnings and diagnostics go to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let mut diag = Diagnostics::default();
    let outcome = execute(cli, &mut diag).and_then(|report| {
        let bytes = report.render(cli.global.format)?;
        match &cli.global.out {
            Some(path) => {
                let mut f = io::create(path)?;
                f.write_all(&bytes)?;
                f.flush()?;
            }
            None => stdout.write_all(&bytes)?,
        }
        Ok(report)
    });
    let quiet = cli.global.quiet;
    match outcome {
        Ok(report) => {
            if !quiet {
                for w in &report.warnings {
                    let _ = writeln!(stderr, "warning: {w}");
                }
                for line in &diag.lines {
                    let _ = writeln!(stderr, "{line}");
                }
                if cli.global.verbose > 0 {
                    let _ = writeln!(stderr, "config: {}", report.config);
                }
            }
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
