//! Experiment orchestration and run persistence.
//!
//! An [`ExperimentConfig`] expands into cells (one classifier, detector or
//! active-learning setup at one seed). Each cell produces a [`RunRecord`]
//! that embeds everything needed to regenerate it with [`rerun`].

mod config;
mod record;
mod run;
mod summary;

pub use config::{AlSweepParams, AnomalyParams, BaselineParams, DataConfig, ExperimentConfig, ExperimentKind};
pub use record::{read_records, write_records, CellConfig, RunRecord, SCHEMA_VERSION};
pub use run::{prepare_split, rerun, run_al_sweep, run_anomaly_bench, run_baselines, run_cell, run_experiment};
pub use summary::{final_f1_median, summarize, Summary};

use std::path::PathBuf;

use thiserror::Error;

use crate::active_learning::AlError;
use crate::classifiers::ClassifierError;
use crate::dataset::DatasetError;
use crate::detectors::DetectorError;
use crate::metrics::MetricsError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}:{line}: schema version {found}, expected {expected}")]
    SchemaVersionMismatch { path: PathBuf, line: usize, found: u32, expected: u32 },
    #[error("record was produced from dataset {expected}, loaded dataset is {found}")]
    DigestMismatch { expected: String, found: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    ActiveLearning(#[from] AlError),
}

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }
}
