//! Numeric primitives shared by detectors, classifiers and query strategies.
//!
//! Euclidean distance is the only metric used anywhere in the toolkit.

mod gaussian;
mod matrix;
mod neighbors;
mod pca;
mod rng;

pub use gaussian::{fit_gaussian, GaussianModel};
pub use matrix::Matrix;
pub use neighbors::{knn_distances, Neighbor, NeighborIndex, Neighbors};
pub use pca::{pca_fit, PcaModel};
pub use rng::{RngState, SeededRng};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("neighbor index is empty")]
    EmptyIndex,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least {needed} points, found {found}")]
    InsufficientPoints { needed: usize, found: usize },
    #[error("covariance is not positive definite after adding ridge {ridge}")]
    SingularAfterRidge { ridge: f64 },
    #[error("eigendecomposition failed: {0}")]
    DecompositionFailure(String),
    #[error("matrix buffer of length {len} does not match {rows}x{cols}")]
    Shape { rows: usize, cols: usize, len: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
}

/// Squared Euclidean distance.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
