//! Batch front end for the `esqpt` library: parses a run, computes one
//! table per subcommand and writes it as CSV or JSON.

pub mod commands;
pub mod config;
pub mod error;
pub mod grid;
pub mod selftest;
pub mod table;

use std::ffi::OsString;

use clap::Parser;

pub use commands::run_command;
pub use config::{parse_config, RunConfig};
pub use error::CliError;
pub use table::{emit_table, Table};

/// Environment variable capping the worker thread count.
pub const THREADS_VAR: &str = "ESQPT_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_VAR}: expected a positive integer, got '{text}'")))?;
    // A pool that is already built (repeated calls in one process) is kept.
    if rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().is_err() {
        log::debug!("worker pool already initialized");
    }
    Ok(())
}

fn execute(cli: &config::Cli) -> Result<(), CliError> {
    configure_threads()?;
    let config = config::resolve(cli)?;
    if config.selftest {
        return selftest::run_selftest(config.command);
    }
    let table = run_command(&config)?;
    emit_table(&table, config.format, config.out.as_deref())
}

/// Runs the program on `argv` and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match config::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("esqpt-lab: error: {e}");
            e.exit_code()
        }
    }
}
