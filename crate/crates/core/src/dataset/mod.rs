//! Elliptic-format transaction data: ingestion, temporal split, undersampling.
//!
//! File layout follows the public distribution:
//!
//! * `elliptic_txs_features.csv`: no header, 167 columns
//!   (`txId`, time step, 165 further features). The time step is kept as the
//!   first of the 166 model features.
//! * `elliptic_txs_classes.csv`: header `txId,class`; class is `1` (illicit),
//!   `2` (licit) or `unknown`.
//! * `elliptic_txs_edgelist.csv`: optional; only its digest is recorded.

mod load;
mod split;
pub mod synthetic;

pub use load::{load_dataset, load_dataset_with_edges, DataPaths, Manifest, StepCounts};
pub use split::{temporal_split, undersample_illicit, undersample_keep_count, DatasetSplit, DEFAULT_BOUNDARY};

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

use crate::numkit::Matrix;

/// Number of model features per transaction (time step included).
pub const N_FEATURES: usize = 166;
pub const MAX_TIME_STEP: u32 = 49;

pub type TxId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Illicit,
    Licit,
    Unknown,
}

impl Label {
    pub fn is_labeled(self) -> bool {
        self != Label::Unknown
    }

    /// 1 for illicit, 0 otherwise.
    pub fn as_target(self) -> u8 {
        u8::from(self == Label::Illicit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub tx_id: TxId,
    pub time_step: u32,
    pub features: Vec<f64>,
    pub label: Label,
}

/// All transactions, sorted by ascending `tx_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<TransactionRecord>,
    /// SHA-256 of the canonical (sorted) record encoding. Independent of the
    /// row order of the input files.
    pub source_digest: String,
    pub manifest: Manifest,
}

impl Dataset {
    /// Builds a dataset from in-memory records, validating them the same way
    /// file ingestion does.
    pub fn from_records(mut records: Vec<TransactionRecord>) -> Result<Self, DatasetError> {
        records.sort_by_key(|r| r.tx_id);
        for w in records.windows(2) {
            if w[0].tx_id == w[1].tx_id {
                return Err(DatasetError::DuplicateTxId(w[0].tx_id));
            }
        }
        for r in &records {
            validate_record(r)?;
        }
        let source_digest = canonical_digest(&records);
        let manifest = Manifest::from_records(&records, &source_digest, None);
        Ok(Self { records, source_digest, manifest })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labeled_count(&self) -> usize {
        self.records.iter().filter(|r| r.label.is_labeled()).count()
    }
}

fn validate_record(r: &TransactionRecord) -> Result<(), DatasetError> {
    if r.features.len() != N_FEATURES {
        return Err(DatasetError::InvalidRecord {
            tx_id: r.tx_id,
            reason: format!("expected {N_FEATURES} features, found {}", r.features.len()),
        });
    }
    if let Some(j) = r.features.iter().position(|v| !v.is_finite()) {
        return Err(DatasetError::InvalidRecord { tx_id: r.tx_id, reason: format!("feature {j} is not finite") });
    }
    if !(1..=MAX_TIME_STEP).contains(&r.time_step) || r.features[0] != r.time_step as f64 {
        return Err(DatasetError::InvalidRecord {
            tx_id: r.tx_id,
            reason: format!("time step {} does not match first feature {}", r.time_step, r.features[0]),
        });
    }
    Ok(())
}

fn canonical_digest(records: &[TransactionRecord]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for r in records {
        h.update(r.tx_id.to_le_bytes());
        h.update(r.time_step.to_le_bytes());
        for v in &r.features {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update([match r.label {
            Label::Illicit => 1u8,
            Label::Licit => 2,
            Label::Unknown => 0,
        }]);
    }
    hex::encode(h.finalize())
}

/// Feature matrix and 0/1 targets for a slice of records.
pub fn to_matrix(records: &[TransactionRecord]) -> (Matrix, Vec<u8>) {
    let mut data = Vec::with_capacity(records.len() * N_FEATURES);
    let mut y = Vec::with_capacity(records.len());
    for r in records {
        data.extend_from_slice(&r.features);
        y.push(r.label.as_target());
    }
    let cols = records.first().map_or(N_FEATURES, |r| r.features.len());
    (Matrix::new(records.len(), cols, data).expect("records share one width"), y)
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("io error reading {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed row at {}:{line}: {reason}", path.display())]
    MalformedRow { path: PathBuf, line: u64, reason: String },
    #[error("unknown class token {token:?} at line {line}")]
    UnknownClassToken { token: String, line: u64 },
    #[error("duplicate tx id {0}")]
    DuplicateTxId(TxId),
    #[error("class row for tx id {0} has no feature row")]
    DanglingClassRow(TxId),
    #[error("feature row for tx id {0} has no class row")]
    MissingClassRow(TxId),
    #[error("invalid record {tx_id}: {reason}")]
    InvalidRecord { tx_id: TxId, reason: String },
    #[error("split boundary {0} outside 1..{MAX_TIME_STEP}")]
    BoundaryOutOfRange(u32),
    #[error("{0} side of the split is empty")]
    EmptySide(&'static str),
    #[error("target illicit rate {target} is above the current {side} rate {current}")]
    TargetRateAboveCurrent { side: &'static str, current: f64, target: f64 },
    #[error("illicit rate must lie in (0, 1), got {0}")]
    InvalidRate(f64),
}
