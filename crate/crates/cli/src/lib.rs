//! The `lidscope` command line: argument parsing, run configuration,
//! command execution and report emission.

pub mod args;
pub mod commands;
pub mod config;
pub mod outputs;
pub mod svg;

use std::fmt;

pub use args::Cli;
use args::Command;
use config::RunConfig;

/// Bad flags or configuration; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug)]
pub enum CliError {
    Usage(UsageError),
    Failed(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) => write!(f, "{e}"),
            CliError::Failed(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<UsageError> for CliError {
    fn from(e: UsageError) -> Self {
        CliError::Usage(e)
    }
}

/// Executes one parsed command line inside a thread pool sized by
/// `--threads` (or `LIDSCOPE_THREADS`).
pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.command.threads().unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Failed(e.into()))?;
    pool.install(|| match &cli.command {
        Command::Selftest(a) => commands::selftest(a),
        other => {
            let cfg = RunConfig::resolve(other)?;
            commands::execute(&cfg)
        }
    })
}
