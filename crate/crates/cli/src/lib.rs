//! Library side of the `tg-align` binary: argument parsing, run
//! configuration and the subcommands.

pub mod args;
pub mod commands;
pub mod config;

use std::ffi::OsString;

use clap::{CommandFactory, FromArgMatches};
use tg_align_core::{Error, Result};

pub use args::Cli;
pub use commands::{execute, Outcome};
pub use config::{CommandKind, RunConfig};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "TG_ALIGN_THREADS";

/// Size the global rayon pool from [`THREADS_ENV`], if set.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("could not size the thread pool: {e}")))
}

/// Parse arguments and resolve them into a validated run configuration.
/// Clap errors (including `--help`) are returned untouched for the caller to
/// print.
pub fn parse<I, T>(argv: I) -> std::result::Result<Result<RunConfig>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = Cli::command().try_get_matches_from(argv)?;
    let cli = Cli::from_arg_matches(&matches)?;
    let explicit: Vec<String> = match matches.subcommand() {
        Some((_, sub)) => sub
            .ids()
            .map(|id| id.as_str().to_string())
            .filter(|id| sub.value_source(id) == Some(clap::parser::ValueSource::CommandLine))
            .collect(),
        None => Vec::new(),
    };
    Ok(cli.command.resolve(&explicit).and_then(|cfg| cfg.validate().map(|_| cfg)))
}
