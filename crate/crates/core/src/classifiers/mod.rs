//! Supervised baselines: logistic regression, random forest and
//! gradient-boosted trees.
//!
//! Every model maps a feature row to a score in `[0, 1]` where higher means
//! more likely illicit. Hard predictions use `score > 0.5`.

mod boosted;
mod forest;
mod logistic;
mod tree;

pub use boosted::{train_boosted, train_boosted_traced, BoostedConfig, BoostedModel, RegressionTree};
pub use forest::{train_forest, ForestConfig, ForestModel};
pub use logistic::{logistic_gradient, objective, objective_gradient, train_logistic, LogisticConfig, LogisticModel};
pub use tree::{DecisionTree, MaxFeatures, TreeConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::Matrix;

/// Current model JSON format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("training pool contains a single class")]
    SingleClassPool,
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model format: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Lr,
    Rf,
    Gbt,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::Lr, ClassifierKind::Rf, ClassifierKind::Gbt];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Lr => "lr",
            ClassifierKind::Rf => "rf",
            ClassifierKind::Gbt => "gbt",
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "logistic" => Ok(ClassifierKind::Lr),
            "rf" | "forest" => Ok(ClassifierKind::Rf),
            "gbt" | "xgboost" | "boosted" => Ok(ClassifierKind::Gbt),
            other => Err(format!("unknown classifier {other:?}")),
        }
    }
}

/// Hyperparameters for all three model families.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub logistic: LogisticConfig,
    pub forest: ForestConfig,
    pub boosted: BoostedConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Logistic(LogisticModel),
    Forest(ForestModel),
    Boosted(BoostedModel),
}

impl Model {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Model::Logistic(_) => ClassifierKind::Lr,
            Model::Forest(_) => ClassifierKind::Rf,
            Model::Boosted(_) => ClassifierKind::Gbt,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            Model::Logistic(m) => m.weights.len(),
            Model::Forest(m) => m.dims,
            Model::Boosted(m) => m.dims,
        }
    }

    pub fn score_row(&self, x: &[f64]) -> f64 {
        match self {
            Model::Logistic(m) => m.score(x),
            Model::Forest(m) => m.score(x),
            Model::Boosted(m) => m.score(x),
        }
    }

    /// Per-row scores in `[0, 1]`, aligned to the rows of `x`.
    pub fn predict_scores(&self, x: &Matrix) -> Result<Vec<f64>, ClassifierError> {
        if x.nrows() > 0 && x.ncols() != self.dims() {
            return Err(ClassifierError::DimensionMismatch { expected: self.dims(), found: x.ncols() });
        }
        Ok(crate::par::map_range(x.nrows(), |i| self.score_row(x.row(i))))
    }

    /// Versioned JSON encoding used in run provenance.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelEnvelope { format_version: MODEL_FORMAT_VERSION, model: self.clone() })
            .expect("models serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, ClassifierError> {
        let env: ModelEnvelope =
            serde_json::from_str(s).map_err(|e| ClassifierError::Format(e.to_string()))?;
        if env.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifierError::Format(format!(
                "unsupported model format version {}",
                env.format_version
            )));
        }
        Ok(env.model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelEnvelope {
    format_version: u32,
    model: Model,
}

/// Hard labels from scores: illicit iff `score > 0.5`.
pub fn predict_labels(scores: &[f64]) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s > 0.5)).collect()
}

pub(crate) fn check_training_set(x: &Matrix, y: &[u8]) -> Result<(), ClassifierError> {
    if x.nrows() != y.len() {
        return Err(ClassifierError::LengthMismatch { rows: x.nrows(), labels: y.len() });
    }
    let pos = y.iter().filter(|&&v| v != 0).count();
    if pos == 0 || pos == y.len() {
        return Err(ClassifierError::SingleClassPool);
    }
    Ok(())
}

/// Trains the requested model family on `(x, y)`.
pub fn train(kind: ClassifierKind, x: &Matrix, y: &[u8], cfg: &ClassifierConfig, seed: u64) -> Result<Model, ClassifierError> {
    Ok(match kind {
        ClassifierKind::Lr => Model::Logistic(train_logistic(x, y, &cfg.logistic)?),
        ClassifierKind::Rf => Model::Forest(train_forest(x, y, &cfg.forest, seed)?),
        ClassifierKind::Gbt => Model::Boosted(train_boosted(x, y, &cfg.boosted)?),
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::numkit::{Matrix, SeededRng};

    /// Two Gaussian blobs in `d` dimensions, separated along every axis.
    pub fn blobs(n: usize, d: usize, gap: f64, seed: u64) -> (Matrix, Vec<u8>) {
        let mut rng = SeededRng::new(seed);
        let mut data = Vec::with_capacity(n * d);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = (i % 2) as u8;
            for _ in 0..d {
                let u = rng.uniform() - 0.5;
                data.push(u + if label == 1 { gap } else { 0.0 });
            }
            y.push(label);
        }
        (Matrix::new(n, d, data).unwrap(), y)
    }
}
