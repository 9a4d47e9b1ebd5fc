//! Experiment orchestration: configuration, training, evaluation, comparison and
//! persistence.

pub mod checkpoint;
pub mod compare;
pub mod config;
pub mod eval;
pub mod metrics;
pub mod train;

use std::path::PathBuf;

use thiserror::Error;

use crate::env::{EnvError, InvalidAction};
use crate::nn::NnError;

pub use checkpoint::{Checkpoint, CheckpointError, FORMAT_VERSION};
pub use compare::{cmd_compare, CompareCell, CompareOutcome, CompareSummaryRow};
pub use config::{ConfigError, RunConfig};
pub use eval::{cmd_eval, evaluate, EvalEpisode, EvalSummary};
pub use metrics::{EpisodeMetrics, METRICS_HEADER};
pub use train::{cmd_train, seed_streams, train, TrainOutcome};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Network(#[from] NnError),
    #[error(transparent)]
    Action(#[from] InvalidAction),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 1 for usage and configuration errors, 2 for everything that
    /// goes wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config(_) => 1,
            _ => 2,
        }
    }
}
