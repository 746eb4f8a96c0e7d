use serde::{Deserialize, Serialize};

use super::AlError;
use crate::classifiers::{ClassifierConfig, ClassifierKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarmupStrategy {
    Random,
    Iforest,
    Elliptic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HotStrategy {
    None,
    Uncertainty,
    ExpectedModelChange,
}

impl WarmupStrategy {
    pub const ALL: [WarmupStrategy; 3] = [WarmupStrategy::Random, WarmupStrategy::Iforest, WarmupStrategy::Elliptic];

    pub fn name(self) -> &'static str {
        match self {
            WarmupStrategy::Random => "random",
            WarmupStrategy::Iforest => "iforest",
            WarmupStrategy::Elliptic => "elliptic",
        }
    }
}

impl HotStrategy {
    pub const ALL: [HotStrategy; 3] = [HotStrategy::None, HotStrategy::Uncertainty, HotStrategy::ExpectedModelChange];

    pub fn name(self) -> &'static str {
        match self {
            HotStrategy::None => "none",
            HotStrategy::Uncertainty => "uncertainty",
            HotStrategy::ExpectedModelChange => "expected_model_change",
        }
    }
}

impl std::fmt::Display for WarmupStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::fmt::Display for HotStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_batch_size() -> usize {
    50
}
fn default_eval_every() -> usize {
    1
}
fn default_stop_at() -> usize {
    3000
}
fn default_warmup() -> WarmupStrategy {
    WarmupStrategy::Random
}
fn default_hot() -> HotStrategy {
    HotStrategy::Uncertainty
}
fn default_classifier() -> ClassifierKind {
    ClassifierKind::Rf
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlConfig {
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_warmup")]
    pub warmup: WarmupStrategy,
    #[serde(default = "default_hot")]
    pub hot: HotStrategy,
    #[serde(default = "default_classifier")]
    pub classifier: ClassifierKind,
    #[serde(default)]
    pub seed: u64,
    /// Evaluate on the test side every this many iterations. The final
    /// iteration is always evaluated.
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    /// The session finishes once the labeled pool reaches this size.
    #[serde(default = "default_stop_at")]
    pub stop_at: usize,
    #[serde(default)]
    pub models: ClassifierConfig,
}

impl Default for AlConfig {
    fn default() -> Self {
        Self {
            batch_size: default_batch_size(),
            warmup: default_warmup(),
            hot: default_hot(),
            classifier: default_classifier(),
            seed: 0,
            eval_every: default_eval_every(),
            stop_at: default_stop_at(),
            models: ClassifierConfig::default(),
        }
    }
}

impl AlConfig {
    pub fn validate(&self, pool: usize) -> Result<(), AlError> {
        if pool == 0 {
            return Err(AlError::EmptyPool);
        }
        if self.batch_size == 0 {
            return Err(AlError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(AlError::InvalidConfig("eval_every must be at least 1".into()));
        }
        if self.stop_at < self.batch_size || self.stop_at > pool {
            return Err(AlError::InvalidStop { stop_at: self.stop_at, batch_size: self.batch_size, pool });
        }
        Ok(())
    }

    /// Short label such as `rf/random/uncertainty`.
    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.classifier, self.warmup, self.hot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let c: AlConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c.batch_size, 50);
        assert_eq!(c.warmup, WarmupStrategy::Random);
        assert_eq!(c.hot, HotStrategy::Uncertainty);
        assert_eq!(c.classifier, ClassifierKind::Rf);
        assert!(c.validate(5000).is_ok());
        assert!(matches!(c.validate(100), Err(AlError::InvalidStop { .. })));
        let c = AlConfig { stop_at: 10, ..AlConfig::default() };
        assert!(matches!(c.validate(5000), Err(AlError::InvalidStop { .. })));
        let c = AlConfig { batch_size: 0, ..AlConfig::default() };
        assert!(matches!(c.validate(5000), Err(AlError::InvalidConfig(_))));
        assert!(serde_json::from_str::<AlConfig>(r#"{"batch":5}"#).is_err());
        let c: AlConfig = serde_json::from_str(r#"{"hot":"expected_model_change","warmup":"iforest"}"#).unwrap();
        assert_eq!(c.label(), "rf/iforest/expected_model_change");
    }
}
