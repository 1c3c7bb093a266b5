//! Benchmark harness: simulate -> infer per variant -> evaluate -> summarize,
//! driven by a single JSON config with deterministic seeding and file-based
//! handoff between stages.

use thiserror::Error;

pub mod config;
pub mod equivalence;
pub mod harness;

pub use config::BenchmarkConfig;
pub use equivalence::{equivalence_check, EquivalenceReport};
pub use harness::{run_benchmark, BenchmarkReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] netrecon_core::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{failed} of {total} replicate-variant cells failed (limit 10%)")]
    ExcessCellFailures { failed: usize, total: usize },
}

impl HarnessError {
    /// Process exit code: 1 for config errors, 2 for excess cell failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::ExcessCellFailures { .. } => 2,
            _ => 1,
        }
    }
}
