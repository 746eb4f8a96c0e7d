use thiserror::Error;

use crate::active_learning::AlError;
use crate::bench::BenchError;
use crate::classifiers::ClassifierError;
use crate::dataset::DatasetError;
use crate::detectors::DetectorError;
use crate::metrics::MetricsError;
use crate::numkit::NumError;

/// Union of every module error, for callers that do not care which stage failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    ActiveLearning(#[from] AlError),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
