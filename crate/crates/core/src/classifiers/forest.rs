use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, MaxFeatures, TreeConfig};
use super::{check_training_set, ClassifierError};
use crate::numkit::{Matrix, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: None, min_samples_leaf: 1, max_features: MaxFeatures::Sqrt, bootstrap: true }
    }
}

/// Bagged CART ensemble; the score is the fraction of trees voting illicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub dims: usize,
    pub config: ForestConfig,
    pub seed: u64,
}

impl ForestModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.votes_illicit(x)).count();
        votes as f64 / self.trees.len() as f64
    }
}

/// Tree `t` draws from stream `t` of `seed`, so the result does not depend on
/// how trees are scheduled across threads.
pub fn train_forest(x: &Matrix, y: &[u8], cfg: &ForestConfig, seed: u64) -> Result<ForestModel, ClassifierError> {
    check_training_set(x, y)?;
    if cfg.n_trees == 0 {
        return Err(ClassifierError::InvalidConfig("n_trees must be >= 1".into()));
    }
    let tree_cfg = TreeConfig {
        max_depth: cfg.max_depth,
        min_samples_split: 2,
        min_samples_leaf: cfg.min_samples_leaf,
        max_features: cfg.max_features,
    };
    let n = x.nrows();
    let trees = crate::par::try_map_range(cfg.n_trees, |t| {
        let mut rng = SeededRng::with_stream(seed, t as u64);
        let sample: Vec<usize> = if cfg.bootstrap {
            (0..n).map(|_| rng.below(n)).collect()
        } else {
            (0..n).collect()
        };
        DecisionTree::fit(x, y, &sample, &tree_cfg, &mut rng)
    })?;
    Ok(ForestModel { trees, dims: x.ncols(), config: cfg.clone(), seed })
}
