//! Command-line front end for `hyperchoreo`: solving, verification,
//! continuation sweeps, random search and export of plot data.
//!
//! Exit codes: 0 on success, 2 when a solve or check does not converge,
//! 3 for an infeasible seed, 4 for unreadable or malformed input.

use std::io;
use std::path::Path;
use std::time::Instant;

use hyperchoreo::optimizer::Clock;
use hyperchoreo::ChoreoError;
use thiserror::Error;

pub mod args;
pub mod commands;
pub mod file;

pub use args::Cli;
pub use file::SolutionFile;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    NotConverged(String),
    #[error("infeasible seed: {0}")]
    InfeasibleSeed(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ChoreoError),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotConverged(_) => 2,
            CliError::InfeasibleSeed(_) => 3,
            CliError::Core(e) if is_infeasible(e) => 3,
            _ => 4,
        }
    }
}

pub(crate) fn is_infeasible(e: &ChoreoError) -> bool {
    matches!(
        e,
        ChoreoError::Collision(_) | ChoreoError::OutOfDisk { .. } | ChoreoError::InfeasibleSeed(_)
    )
}

/// Seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct SystemClock(Instant);

impl SystemClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
