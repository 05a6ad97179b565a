#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Exit status for invalid input, matching clap's usage errors.
const EXIT_USAGE: u8 = 2;

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("ESPIDER_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("ESPIDER_THREADS must be a positive integer, got '{v}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("espider: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    let outcome = match commands::run(&cli.command, cli.format) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("espider: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Err(e) = output::emit(cli.out.as_deref(), &outcome.text) {
        eprintln!("espider: cannot write output: {e}");
        return ExitCode::FAILURE;
    }
    if outcome.failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
