//! Illicit-transaction detection toolkit for Elliptic-format Bitcoin data.
//!
//! The crate covers the full offline workflow:
//!
//! * [`dataset`]: ingestion, temporal splitting and minority undersampling.
//! * [`numkit`]: nearest neighbours, Gaussian fits, PCA and seeded RNG.
//! * [`classifiers`]: logistic regression, random forest and gradient-boosted trees.
//! * [`detectors`]: eight unsupervised anomaly scorers behind one contract.
//! * [`metrics`]: illicit F1, contamination thresholds, per-step series, aggregation.
//! * [`active_learning`]: the pool-based labeling loop with warm-up and hot learners.
//! * [`bench`]: experiment orchestration and run persistence.
//!
//! Data-parallel inner loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iteration otherwise.

pub mod active_learning;
pub mod bench;
pub mod classifiers;
pub mod dataset;
pub mod detectors;
pub mod metrics;
pub mod numkit;
pub mod par;

mod error;

pub use error::{Error, Result};

/// Toolkit version recorded in run provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
