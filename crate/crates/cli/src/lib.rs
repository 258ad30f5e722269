//! Command-line front end: spec-file parsing, subcommand dispatch and the
//! JSON report envelope.

pub mod args;
pub mod commands;
pub mod report;
pub mod specfile;

use std::time::Instant;

use clap::Parser;

use args::{Cli, Command};
use commands::{CliError, FactorArgs, Outcome};
use report::{render, RunReport, Timing, SCHEMA_VERSION};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// What the process should print and return.
pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn dispatch(cmd: &Command) -> Result<(Outcome, bool), CliError> {
    Ok(match cmd {
        Command::Invariants { source, sampling, tolerance, output } => {
            (commands::invariants(source, sampling, *tolerance)?, output.pretty)
        }
        Command::Verify { source, sampling, identity, tolerance, output } => {
            (commands::verify(source, sampling, identity, *tolerance)?, output.pretty)
        }
        Command::Inequality { dim, depth, output } => (commands::inequality(*dim, *depth)?, output.pretty),
        Command::Conformal { source, sampling, f, u, convention, resolution, tolerance, output } => {
            let fa = FactorArgs { f: f.as_deref(), u: u.as_deref(), convention: convention.as_deref() };
            (commands::conformal(source, sampling, &fa, *resolution, *tolerance)?, output.pretty)
        }
        Command::Yamabe { dim, period, steps, sampling, tolerance, output } => {
            (commands::yamabe(*dim, *period, *steps, sampling, *tolerance)?, output.pretty)
        }
        Command::Hypersurface { source, sampling, tolerance, output } => {
            (commands::hypersurface(source, sampling, *tolerance)?, output.pretty)
        }
        Command::RigidityReport { source, resolution, parts, tolerance, output } => {
            (commands::rigidity(source, *resolution, *parts, *tolerance)?, output.pretty)
        }
        Command::Catalog { catalog, dim, params, output } => {
            (commands::catalog(catalog.as_deref(), *dim, params)?, output.pretty)
        }
    })
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Invariants { .. } => "invariants",
        Command::Verify { .. } => "verify",
        Command::Inequality { .. } => "inequality",
        Command::Conformal { .. } => "conformal",
        Command::Yamabe { .. } => "yamabe",
        Command::Hypersurface { .. } => "hypersurface",
        Command::RigidityReport { .. } => "rigidity-report",
        Command::Catalog { .. } => "catalog",
    }
}

/// Run with the given arguments (including the program name).
pub fn run<I, T>(argv: I) -> Run
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // --help and --version are successful runs.
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Run { code, stdout: String::new(), stderr: text }
            } else {
                Run { code, stdout: text, stderr: String::new() }
            };
        }
    };
    let start = Instant::now();
    match dispatch(&cli.command) {
        Ok((o, pretty)) => {
            let report = RunReport {
                schema: SCHEMA_VERSION,
                tool: "qcurv",
                version: env!("CARGO_PKG_VERSION"),
                subcommand: subcommand_name(&cli.command).to_string(),
                input_digest: o.input_digest,
                parameters: o.parameters,
                results: o.results,
                pass: o.pass,
                timing: Timing { elapsed_seconds: start.elapsed().as_secs_f64() },
            };
            let mut stdout = render(&report, pretty);
            stdout.push('\n');
            Run { code: if o.pass { EXIT_PASS } else { EXIT_FAIL }, stdout, stderr: String::new() }
        }
        Err(e) => Run { code: EXIT_INPUT, stdout: String::new(), stderr: format!("qcurv: error: {e}\n") },
    }
}
