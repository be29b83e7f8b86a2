//! Benchmark orchestration: plans, budget parity, synthetic data and
//! leaderboards.

mod bench;
mod meta;
mod plan;
mod report;
mod synthetic;

use std::path::PathBuf;

use thiserror::Error;

pub use bench::{
    anytime_readout, load_dataset, run_benchmark, run_file_name, BenchmarkOutcome,
    EnsembleSummary, Readout, RunSummary,
};
pub use meta::build_meta_matrix;
pub use plan::{BenchmarkPlan, DatasetSpec, ParityMode};
pub use report::{
    render_report, Leaderboard, LeaderboardRow, OptimizerCell, ReportFormat, FOOTER_LABEL,
};
pub use synthetic::{generate_synthetic, GeneratorError, GeneratorSpec, GENERATORS};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{optimizer} (seed {seed}): {message}")]
    Run {
        optimizer: String,
        seed: u64,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("leaderboard has no rows")]
    EmptyLeaderboard,
}
