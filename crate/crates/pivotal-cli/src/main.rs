//! Batch front-end: config ingestion, study execution, seeded
//! reproducibility, CSV emission for downstream plotting.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.
//! Progress goes to stderr; data goes to files only.

mod commands;
mod manifest;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "pivotal", version, about = "Event importance in multi-event contests")]
struct Cli {
    /// Worker threads (default: all cores; env EI_THREADS as fallback).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schedule studies over sequential winner-takes-all elections.
    Primaries(commands::primaries::Args),
    /// Per-match event importance over a football league season.
    League(commands::league::Args),
    /// Compare Monte Carlo conditionals against exact enumeration.
    Oracle(commands::oracle::Args),
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
    Internal(anyhow::Error),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<pivotal::data::DataError> for CliError {
    fn from(e: pivotal::data::DataError) -> Self {
        CliError::Data(e.into())
    }
}

impl From<pivotal::engine::EngineError> for CliError {
    fn from(e: pivotal::engine::EngineError) -> Self {
        CliError::Internal(e.into())
    }
}

impl From<pivotal::league::LeagueError> for CliError {
    fn from(e: pivotal::league::LeagueError) -> Self {
        use pivotal::league::LeagueError;
        match e {
            LeagueError::Engine(inner) => CliError::Internal(inner.into()),
            LeagueError::Data(inner) => CliError::Data(inner.into()),
            other => CliError::Data(other.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };

    let threads = cli.threads.or_else(|| {
        std::env::var("EI_THREADS").ok().and_then(|v| v.parse().ok())
    });
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(3);
        }
    };

    let result = pool.install(|| match cli.command {
        Command::Primaries(args) => commands::primaries::run(args),
        Command::League(args) => commands::league::run(args),
        Command::Oracle(args) => commands::oracle::run(args),
    });

    if let Err(err) = result {
        match &err {
            CliError::Usage(msg) => eprintln!("error: {msg}"),
            CliError::Data(e) | CliError::Internal(e) => eprintln!("error: {e:#}"),
        }
        std::process::exit(err.code());
    }
}
