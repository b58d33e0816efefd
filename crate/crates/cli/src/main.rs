//! `rankbias` command-line tool.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 when an input file is
//! missing or invalid. Diagnostics go to standard error.

mod cli;
mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use crate::cli::Cli;

/// A problem with the command line itself rather than with the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        1
    } else {
        2
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    // Warnings from config merging need the logger before argument parsing.
    let verbose = std::env::args()
        .filter(|a| a == "-v" || a == "--verbose")
        .count()
        + std::env::args()
            .filter(|a| a.starts_with("-vv") && a.chars().skip(1).all(|c| c == 'v'))
            .map(|a| a.len() - 1)
            .sum::<usize>();
    init_logging(verbose.min(u8::MAX as usize) as u8);

    let args = match config::merge(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(exit_code(&err));
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
