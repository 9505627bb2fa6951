//! `simulate → analyze → report` pipeline behind the `casimir-lab` binary.
//!
//! A dataset directory holds `manifest.json` and one CSV per sweep under
//! `sweeps/`; `analyze` turns it into shift, fit and differential tables and
//! `report` derives plot-ready CSVs from those.

pub mod analyze;
pub mod config;
pub mod error;
pub mod format;
pub mod manifest;
pub mod report;
pub mod simulate;

pub use analyze::{analyze, load_dataset, AnalyzeOutput, AnalyzeOverrides};
pub use config::{example_config, RunConfig};
pub use error::CliError;
pub use report::report;
pub use simulate::{simulate, SimulateSummary};

/// Caps the worker threads used for generation and analysis.
pub const THREADS_ENV: &str = "CASIMIR_LAB_THREADS";

/// Thread cap requested through [`THREADS_ENV`], if any.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{THREADS_ENV}={v:?} is not a positive integer"
            ))),
        },
    }
}

/// Runs `f` on a pool of at most `threads` workers (global pool if `None`).
pub fn with_threads<R: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<R, CliError> + Send,
) -> Result<R, CliError> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(f),
    }
}

pub(crate) fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}
