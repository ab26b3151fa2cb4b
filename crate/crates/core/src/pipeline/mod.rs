//! Declarative replication pipelines.
//!
//! A plain-text file lists global settings and then one `[stage]` block per
//! protocol step, in protocol order. Each executed stage records a digest
//! of its inputs (its parameters, the files it reads and every earlier
//! stage's digest) and of the artifacts it wrote in `state.json`; a rerun
//! skips stages whose digests still match.

mod config;
mod run;

use thiserror::Error;

pub use config::{load_config, parse_config, CategoryTrend, FitSeries, PipelineConfig, StageConfig, StageKind};
pub use run::{run_pipeline, Halt, RunReport, STATE_FILE};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("missing input files: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("stage {stage} failed: {message}")]
    Stage { stage: String, message: String },
}
