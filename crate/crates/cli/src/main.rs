//! `sqg`: batch front-end for simulations and verification suites.
//!
//! Exit codes: 0 success, 1 check failure or solver abort, 2 usage or
//! configuration error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "sqg", version, about = "Critical SQG laboratory on bounded domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML sections of key-value pairs).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides output.dir from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Single worker thread and fixed reduction order; reruns are bit-identical.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured problem and write trajectory, snapshots and manifest.
    Simulate,
    /// Run a verification suite and write PASS/FAIL reports.
    Verify {
        /// kernels, lp, calibration, degiorgi, interpolation, barrier or all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Measure oscillation decay over nested cylinders and fit a Hölder exponent.
    Holder {
        /// Produce the trajectory in-process instead of reading snapshots.
        #[arg(long)]
        inline: bool,
    },
}

/// Failure classes mapped onto the exit-code contract.
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Failure(format!("{e:#}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let threads = if cli.deterministic { Some(1) } else { cli.threads };
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not size the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let opts = commands::Options { config: cli.config, out: cli.out, deterministic: cli.deterministic };
    let result = match cli.command {
        Command::Simulate => commands::simulate(&opts),
        Command::Verify { suite } => commands::verify(&opts, &suite),
        Command::Holder { inline } => commands::holder(&opts, inline),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
