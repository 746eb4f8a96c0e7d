//! Pool-based active learning.
//!
//! A session starts with every training transaction unlabeled. Each
//! iteration selects a batch, receives labels from an oracle and retrains the
//! configured classifier. Until the labeled pool holds an illicit instance
//! the session is in warm-up and queries with an unsupervised strategy; after
//! that the hot strategy takes over.

mod config;
mod data;
mod query;
mod session;
mod simulate;

pub use config::{AlConfig, HotStrategy, WarmupStrategy};
pub use data::AlData;
pub use query::{egl, query_expected_model_change, query_uncertainty, top_b};
pub use session::{AlSession, PendingItem, Phase, PhaseChange, SubmitOutcome};
pub use simulate::{run_simulated, AlRun, LabelOracle};

use thiserror::Error;

use crate::classifiers::ClassifierError;
use crate::dataset::TxId;
use crate::detectors::DetectorError;
use crate::metrics::MetricsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlError {
    #[error("training pool is empty")]
    EmptyPool,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("stop_at {stop_at} must lie in [batch_size {batch_size}, pool size {pool}]")]
    InvalidStop { stop_at: usize, batch_size: usize, pool: usize },
    #[error("a batch of {0} items is already pending")]
    BatchPending(usize),
    #[error("no batch is pending")]
    NoPendingBatch,
    #[error("unlabeled pool exhausted")]
    PoolExhausted,
    #[error("labeled pool reached stop_at = {0}")]
    StopReached(usize),
    #[error("answers do not match the pending batch (missing {missing:?}, extra {extra:?})")]
    BatchMismatch { missing: Vec<TxId>, extra: Vec<TxId> },
    #[error("unknown transaction ids {0:?}")]
    UnknownTxId(Vec<TxId>),
    #[error("answer for {0} must be illicit or licit")]
    InvalidLabel(TxId),
    #[error("no trained model available for the query strategy")]
    UntrainedModel,
    #[error("session was created for a pool of {expected} transactions, data has {found}")]
    PoolMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
