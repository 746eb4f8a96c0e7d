use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::active_learning::{AlConfig, HotStrategy, WarmupStrategy};
use crate::classifiers::{ClassifierConfig, ClassifierKind};
use crate::dataset::{DataPaths, DEFAULT_BOUNDARY, MAX_TIME_STEP};
use crate::detectors::{DetectorSpec, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Baselines,
    AnomalyBench,
    AlSweep,
}

/// Dataset file locations. Unset paths fall back to the standard file names
/// under the data directory chosen by the caller.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub features: Option<PathBuf>,
    #[serde(default)]
    pub classes: Option<PathBuf>,
    #[serde(default)]
    pub edges: Option<PathBuf>,
}

impl DataConfig {
    /// Resolves file paths, using `fallback_dir` when neither explicit paths
    /// nor `dir` are set.
    pub fn resolve(&self, fallback_dir: Option<&std::path::Path>) -> Option<DataPaths> {
        let base = self
            .dir
            .clone()
            .or_else(|| fallback_dir.map(|p| p.to_path_buf()))
            .map(DataPaths::from_dir);
        let features = self.features.clone().or_else(|| base.as_ref().map(|b| b.features.clone()))?;
        let classes = self.classes.clone().or_else(|| base.as_ref().map(|b| b.classes.clone()))?;
        let edges = self.edges.clone().or_else(|| base.and_then(|b| b.edges));
        Some(DataPaths { features, classes, edges })
    }
}

fn default_classifiers() -> Vec<ClassifierKind> {
    ClassifierKind::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineParams {
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierKind>,
    #[serde(default)]
    pub models: ClassifierConfig,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self { classifiers: default_classifiers(), models: ClassifierConfig::default() }
    }
}

fn default_detectors() -> Vec<DetectorSpec> {
    Method::BENCHMARK.iter().map(|m| DetectorSpec::with_defaults(*m, 0)).collect()
}

fn default_grid() -> Vec<f64> {
    vec![0.05, 0.10, 0.15, 0.20]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnomalyParams {
    /// Detector seeds are replaced by the run seed.
    #[serde(default = "default_detectors")]
    pub detectors: Vec<DetectorSpec>,
    #[serde(default = "default_grid")]
    pub grid: Vec<f64>,
    /// Sweep 0.05..=1.00 in steps of 0.05 instead of `grid`.
    #[serde(default)]
    pub full_grid: bool,
    /// Adds the random-forest baseline thresholded at the same alert rates.
    #[serde(default = "yes")]
    pub include_rf: bool,
    #[serde(default)]
    pub models: ClassifierConfig,
}

impl Default for AnomalyParams {
    fn default() -> Self {
        Self {
            detectors: default_detectors(),
            grid: default_grid(),
            full_grid: false,
            include_rf: true,
            models: ClassifierConfig::default(),
        }
    }
}

impl AnomalyParams {
    pub fn effective_grid(&self) -> Vec<f64> {
        if self.full_grid {
            (1..=20).map(|i| f64::from(i) * 0.05).collect()
        } else {
            self.grid.clone()
        }
    }
}

fn default_warmups() -> Vec<WarmupStrategy> {
    vec![WarmupStrategy::Random]
}
fn default_hots() -> Vec<HotStrategy> {
    vec![HotStrategy::Uncertainty]
}
fn default_al_classifiers() -> Vec<ClassifierKind> {
    vec![ClassifierKind::Rf]
}

/// Grid of active-learning setups; every combination of warm-up, hot
/// strategy and classifier is run at every seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlSweepParams {
    #[serde(default = "default_warmups")]
    pub warmup: Vec<WarmupStrategy>,
    #[serde(default = "default_hots")]
    pub hot: Vec<HotStrategy>,
    #[serde(default = "default_al_classifiers")]
    pub classifier: Vec<ClassifierKind>,
    #[serde(default = "AlSweepParams::default_batch")]
    pub batch_size: usize,
    #[serde(default = "AlSweepParams::default_eval")]
    pub eval_every: usize,
    #[serde(default = "AlSweepParams::default_stop")]
    pub stop_at: usize,
    #[serde(default)]
    pub models: ClassifierConfig,
}

impl AlSweepParams {
    fn default_batch() -> usize {
        AlConfig::default().batch_size
    }
    fn default_eval() -> usize {
        AlConfig::default().eval_every
    }
    fn default_stop() -> usize {
        AlConfig::default().stop_at
    }

    /// Expands the grid in (classifier, warm-up, hot) order.
    pub fn configs(&self, seed: u64) -> Vec<AlConfig> {
        let mut out = Vec::new();
        for &classifier in &self.classifier {
            for &warmup in &self.warmup {
                for &hot in &self.hot {
                    out.push(AlConfig {
                        batch_size: self.batch_size,
                        warmup,
                        hot,
                        classifier,
                        seed,
                        eval_every: self.eval_every,
                        stop_at: self.stop_at,
                        models: self.models.clone(),
                    });
                }
            }
        }
        out
    }
}

impl Default for AlSweepParams {
    fn default() -> Self {
        Self {
            warmup: default_warmups(),
            hot: default_hots(),
            classifier: default_al_classifiers(),
            batch_size: Self::default_batch(),
            eval_every: Self::default_eval(),
            stop_at: Self::default_stop(),
            models: ClassifierConfig::default(),
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

fn default_boundary() -> u32 {
    DEFAULT_BOUNDARY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default = "default_boundary")]
    pub boundary: u32,
    /// Illicit share to undersample both split sides to, if set.
    #[serde(default)]
    pub undersample_rate: Option<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub baselines: BaselineParams,
    #[serde(default)]
    pub anomaly: AnomalyParams,
    #[serde(default)]
    pub al: AlSweepParams,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            data: DataConfig::default(),
            boundary: DEFAULT_BOUNDARY,
            undersample_rate: None,
            seeds: default_seeds(),
            baselines: BaselineParams::default(),
            anomaly: AnomalyParams::default(),
            al: AlSweepParams::default(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self, BenchError> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks that do not need the dataset.
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.boundary < 1 || self.boundary >= MAX_TIME_STEP {
            return bad(format!("boundary must lie in [1, {}), got {}", MAX_TIME_STEP, self.boundary));
        }
        if let Some(r) = self.undersample_rate {
            if !(r > 0.0 && r < 1.0) {
                return bad(format!("undersample_rate must lie in (0, 1), got {r}"));
            }
        }
        match self.kind {
            ExperimentKind::Baselines => {
                if self.baselines.classifiers.is_empty() {
                    return bad("baselines.classifiers must not be empty".into());
                }
            }
            ExperimentKind::AnomalyBench => {
                if self.anomaly.detectors.is_empty() && !self.anomaly.include_rf {
                    return bad("anomaly.detectors must not be empty".into());
                }
                let grid = self.anomaly.effective_grid();
                if grid.is_empty() {
                    return bad("anomaly.grid must not be empty".into());
                }
                if grid.iter().any(|c| !(*c > 0.0 && *c <= 1.0)) {
                    return bad("contamination levels must lie in (0, 1]".into());
                }
                let pct: Vec<u64> = grid.iter().map(|c| crate::metrics::contamination_pct(*c)).collect();
                if pct.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("contamination grid must be strictly increasing in whole percents".into());
                }
            }
            ExperimentKind::AlSweep => {
                let al = &self.al;
                if al.warmup.is_empty() || al.hot.is_empty() || al.classifier.is_empty() {
                    return bad("al.warmup, al.hot and al.classifier must not be empty".into());
                }
                if al.batch_size == 0 || al.eval_every == 0 {
                    return bad("al.batch_size and al.eval_every must be at least 1".into());
                }
                if al.stop_at < al.batch_size {
                    return bad(format!("al.stop_at {} is below al.batch_size {}", al.stop_at, al.batch_size));
                }
            }
        }
        Ok(())
    }
}
