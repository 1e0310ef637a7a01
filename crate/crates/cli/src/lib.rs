//! Batch front-end: scenario configs in, solver and check artifacts out.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use config::ScenarioConfig;
pub use error::CliError;
pub use runner::{execute, run_scenario, run_suite, Report, RunOptions};

/// Runs `f` inside a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
