//! `freeclt`: densities of normalized free convolution powers and their
//! convergence to the semicircle law.
//!
//! Exit status is 0 on success, 1 for invalid input, 2 when a solver does
//! not converge (or `verify` finds a failing property) and 3 when a
//! functional required to be finite diverges.

mod args;
mod commands;
mod error;
mod output;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};

const THREADS_VAR: &str = "FREECLT_THREADS";

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let k: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|k| *k > 0)
        .ok_or_else(|| CliError::Invalid(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .map_err(|e| CliError::Invalid(e.to_string()))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match cli.command {
        Command::Density(a) => commands::density(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Functionals(a) => commands::functionals(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Verify(a) => {
            let s = commands::setup(&a.common, &a.n)?;
            let props = verify::run(&s)?;
            for p in &props {
                println!("{} {:<24} {}", if p.pass { "PASS" } else { "FAIL" }, p.name, p.detail);
            }
            if let Some(out) = &a.out {
                output::emit(Some(out), &output::json(&props))?;
            }
            let failed = props.iter().filter(|p| !p.pass).count();
            if failed > 0 {
                return Err(CliError::Verification(failed, props.len()));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reports usage errors with status 2, which is taken here
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
