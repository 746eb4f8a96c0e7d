use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DetectorError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lof,
    Knn,
    Pca,
    Ocsvm,
    Cblof,
    Abod,
    Iforest,
    Elliptic,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Lof,
        Method::Knn,
        Method::Pca,
        Method::Ocsvm,
        Method::Cblof,
        Method::Abod,
        Method::Iforest,
        Method::Elliptic,
    ];

    /// The seven methods of the unsupervised benchmark (elliptic envelope is
    /// only used as an active-learning warm-up).
    pub const BENCHMARK: [Method; 7] = [
        Method::Lof,
        Method::Abod,
        Method::Knn,
        Method::Ocsvm,
        Method::Cblof,
        Method::Pca,
        Method::Iforest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lof => "lof",
            Method::Knn => "knn",
            Method::Pca => "pca",
            Method::Ocsvm => "ocsvm",
            Method::Cblof => "cblof",
            Method::Abod => "abod",
            Method::Iforest => "iforest",
            Method::Elliptic => "elliptic",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("if") && *m == Method::Iforest))
            .ok_or_else(|| format!("unknown detector {s:?}"))
    }
}

/// Validated, typed parameters for one method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodParams {
    Knn { k: usize },
    Lof { k: usize },
    Pca,
    Ocsvm { nu: f64, gamma: Option<f64>, max_reference: usize },
    Cblof { n_clusters: usize, alpha: f64, beta: f64 },
    Abod { k: usize },
    Iforest { n_trees: usize, subsample: usize },
    Elliptic { ridge: f64 },
}

impl MethodParams {
    pub fn defaults(method: Method) -> Self {
        match method {
            Method::Knn => MethodParams::Knn { k: 5 },
            Method::Lof => MethodParams::Lof { k: 20 },
            Method::Pca => MethodParams::Pca,
            Method::Ocsvm => MethodParams::Ocsvm { nu: 0.5, gamma: None, max_reference: super::OCSVM_MAX_REFERENCE },
            Method::Cblof => MethodParams::Cblof { n_clusters: 8, alpha: 0.9, beta: 5.0 },
            Method::Abod => MethodParams::Abod { k: 10 },
            Method::Iforest => MethodParams::Iforest { n_trees: 100, subsample: 256 },
            Method::Elliptic => MethodParams::Elliptic { ridge: 1e-3 },
        }
    }

    /// Smallest reference set the method can be fit on.
    pub fn min_reference(&self) -> usize {
        match *self {
            MethodParams::Knn { k } | MethodParams::Lof { k } | MethodParams::Abod { k } => k + 1,
            MethodParams::Cblof { n_clusters, .. } => n_clusters,
            MethodParams::Pca | MethodParams::Elliptic { .. } => 2,
            MethodParams::Ocsvm { .. } | MethodParams::Iforest { .. } => 1,
        }
    }

    fn keys(method: Method) -> &'static [&'static str] {
        match method {
            Method::Knn | Method::Lof | Method::Abod => &["k"],
            Method::Pca => &[],
            Method::Ocsvm => &["nu", "gamma", "max_reference"],
            Method::Cblof => &["n_clusters", "alpha", "beta"],
            Method::Iforest => &["n_trees", "subsample"],
            Method::Elliptic => &["ridge"],
        }
    }

    fn from_map(method: Method, map: &BTreeMap<String, f64>) -> Result<Self, DetectorError> {
        let allowed = Self::keys(method);
        if let Some(bad) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(DetectorError::InvalidParams(format!("{method} does not accept parameter {bad:?}")));
        }
        let count = |key: &str, default: usize, min: usize| -> Result<usize, DetectorError> {
            match map.get(key) {
                None => Ok(default),
                Some(&v) if v.fract() == 0.0 && v >= min as f64 => Ok(v as usize),
                Some(&v) => Err(DetectorError::InvalidParams(format!("{key} must be an integer >= {min}, got {v}"))),
            }
        };
        let real = |key: &str, default: f64, ok: fn(f64) -> bool| -> Result<f64, DetectorError> {
            match map.get(key) {
                None => Ok(default),
                Some(&v) if ok(v) => Ok(v),
                Some(&v) => Err(DetectorError::InvalidParams(format!("{key} out of range: {v}"))),
            }
        };
        Ok(match Self::defaults(method) {
            MethodParams::Knn { k } => MethodParams::Knn { k: count("k", k, 1)? },
            MethodParams::Lof { k } => MethodParams::Lof { k: count("k", k, 1)? },
            MethodParams::Abod { k } => MethodParams::Abod { k: count("k", k, 2)? },
            MethodParams::Pca => MethodParams::Pca,
            MethodParams::Ocsvm { nu, max_reference, .. } => MethodParams::Ocsvm {
                nu: real("nu", nu, |v| v > 0.0 && v <= 1.0)?,
                gamma: map.get("gamma").copied().map(|g| if g > 0.0 { Ok(g) } else {
                    Err(DetectorError::InvalidParams(format!("gamma must be > 0, got {g}")))
                }).transpose()?,
                max_reference: count("max_reference", max_reference, 1)?,
            },
            MethodParams::Cblof { n_clusters, alpha, beta } => MethodParams::Cblof {
                n_clusters: count("n_clusters", n_clusters, 2)?,
                alpha: real("alpha", alpha, |v| v > 0.0 && v < 1.0)?,
                beta: real("beta", beta, |v| v > 1.0)?,
            },
            MethodParams::Iforest { n_trees, subsample } => MethodParams::Iforest {
                n_trees: count("n_trees", n_trees, 1)?,
                subsample: count("subsample", subsample, 2)?,
            },
            MethodParams::Elliptic { ridge } => MethodParams::Elliptic { ridge: real("ridge", ridge, |v| v >= 0.0)? },
        })
    }
}

/// Serializable detector choice. Parameters are validated when the spec is
/// built or deserialized; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct DetectorSpec {
    method: Method,
    raw: BTreeMap<String, f64>,
    params: MethodParams,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    method: Method,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    params: BTreeMap<String, f64>,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<RawSpec> for DetectorSpec {
    type Error = DetectorError;
    fn try_from(raw: RawSpec) -> Result<Self, Self::Error> {
        DetectorSpec::new(raw.method, raw.params, raw.seed)
    }
}

impl From<DetectorSpec> for RawSpec {
    fn from(s: DetectorSpec) -> Self {
        RawSpec { method: s.method, params: s.raw, seed: s.seed }
    }
}

impl DetectorSpec {
    pub fn new(method: Method, params: BTreeMap<String, f64>, seed: u64) -> Result<Self, DetectorError> {
        let typed = MethodParams::from_map(method, &params)?;
        Ok(Self { method, raw: params, params: typed, seed })
    }

    pub fn with_defaults(method: Method, seed: u64) -> Self {
        Self { method, raw: BTreeMap::new(), params: MethodParams::defaults(method), seed }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn params(&self) -> &MethodParams {
        &self.params
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
