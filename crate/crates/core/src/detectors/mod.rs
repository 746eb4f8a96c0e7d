//! Unsupervised anomaly scorers behind a single fit-on-reference /
//! score-targets contract.
//!
//! Every method returns scores where higher means more anomalous, so one
//! contamination threshold applies uniformly.

mod abod;
mod cblof;
mod elliptic;
mod iforest;
mod knn;
mod lof;
mod ocsvm;
mod pca;
mod spec;

pub use abod::abod_scores;
pub use cblof::{cblof_scores, kmeans, KMeansResult};
pub use elliptic::elliptic_scores;
pub use iforest::{average_path_length, IsolationForest};
pub use knn::knn_scores;
pub use lof::{lof_scores, LofModel};
pub use ocsvm::{OneClassSvm, OCSVM_MAX_REFERENCE};
pub use pca::pca_scores;
pub use spec::{DetectorSpec, Method, MethodParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{Matrix, NumError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("{method} needs at least {needed} reference rows, got {found}")]
    InsufficientReference { method: Method, needed: usize, found: usize },
    #[error("dimension mismatch: reference has {expected} columns, targets have {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid detector parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Numeric(#[from] NumError),
}

/// Scores for a target set, with the spec that produced them and any
/// deviations applied during fitting (e.g. reference subsampling).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyScores {
    pub scores: Vec<f64>,
    pub method: DetectorSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deviations: Vec<String>,
}

/// Fits `spec` on `reference` and scores every row of `targets`.
pub fn fit_score(spec: &DetectorSpec, reference: &Matrix, targets: &Matrix) -> Result<AnomalyScores, DetectorError> {
    let method = spec.method();
    let needed = spec.params().min_reference();
    if reference.nrows() < needed {
        return Err(DetectorError::InsufficientReference { method, needed, found: reference.nrows() });
    }
    if targets.nrows() > 0 && targets.ncols() != reference.ncols() {
        return Err(DetectorError::DimensionMismatch { expected: reference.ncols(), found: targets.ncols() });
    }
    let mut deviations = Vec::new();
    let scores = match *spec.params() {
        MethodParams::Knn { k } => knn_scores(reference, targets, k)?,
        MethodParams::Lof { k } => lof_scores(reference, targets, k)?,
        MethodParams::Pca => pca_scores(reference, targets)?,
        MethodParams::Ocsvm { nu, gamma, max_reference } => {
            let svm = OneClassSvm::fit(reference, nu, gamma, max_reference, spec.seed)?;
            if let Some(note) = svm.subsample_note() {
                deviations.push(note);
            }
            svm.score(targets)
        }
        MethodParams::Cblof { n_clusters, alpha, beta } => {
            let (scores, note) = cblof_scores(reference, targets, n_clusters, alpha, beta, spec.seed)?;
            deviations.extend(note);
            scores
        }
        MethodParams::Abod { k } => abod_scores(reference, targets, k)?,
        MethodParams::Iforest { n_trees, subsample } => {
            IsolationForest::fit(reference, n_trees, subsample, spec.seed).score(targets)
        }
        MethodParams::Elliptic { ridge } => elliptic_scores(reference, targets, ridge)?,
    };
    debug_assert_eq!(scores.len(), targets.nrows());
    Ok(AnomalyScores { scores, method: spec.clone(), deviations })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::numkit::{Matrix, SeededRng};

    pub fn uniform(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = SeededRng::new(seed);
        Matrix::new(n, d, (0..n * d).map(|_| rng.uniform()).collect()).unwrap()
    }

    pub fn tight_cluster(n: usize, seed: u64) -> Matrix {
        let mut rng = SeededRng::new(seed);
        let mut data = Vec::new();
        for _ in 0..n {
            for _ in 0..2 {
                // Sum of uniforms: roughly normal with sd 0.1.
                let s: f64 = (0..12).map(|_| rng.uniform()).sum::<f64>() - 6.0;
                data.push(0.1 * s);
            }
        }
        Matrix::new(n, 2, data).unwrap()
    }
}
