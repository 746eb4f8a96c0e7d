use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::numkit::{Matrix, SeededRng};

/// Per-split feature subsample rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt() as usize).max(1),
            MaxFeatures::All => d,
            MaxFeatures::Count(k) => k.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { max_depth: None, min_samples_split: 2, min_samples_leaf: 1, max_features: MaxFeatures::All }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Leaf { illicit: u32, licit: u32 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Binary CART classifier with Gini impurity. Node 0 is the root; rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

struct Best {
    proxy: f64,
    feature: usize,
    threshold: f64,
}

impl DecisionTree {
    /// Fits on `sample` (row indices into `x`; repeats act as weights).
    ///
    /// Candidate features are visited in a random order; the search stops
    /// after `max_features` of them once any valid split exists. Among
    /// evaluated candidates the lowest weighted Gini wins, ties going to the
    /// lowest feature index and then the lowest threshold. Thresholds are
    /// midpoints between consecutive distinct values.
    pub fn fit(
        x: &Matrix,
        y: &[u8],
        sample: &[usize],
        cfg: &TreeConfig,
        rng: &mut SeededRng,
    ) -> Result<Self, ClassifierError> {
        if x.nrows() != y.len() {
            return Err(ClassifierError::LengthMismatch { rows: x.nrows(), labels: y.len() });
        }
        if cfg.min_samples_leaf == 0 {
            return Err(ClassifierError::InvalidConfig("min_samples_leaf must be >= 1".into()));
        }
        let d = x.ncols();
        let k = cfg.max_features.resolve(d);
        let mut nodes = vec![Node::Leaf { illicit: 0, licit: 0 }];
        let mut stack = vec![(0usize, sample.to_vec(), 0usize)];
        let mut features: Vec<usize> = (0..d).collect();
        let mut pairs: Vec<(f64, u8)> = Vec::new();

        while let Some((slot, idx, depth)) = stack.pop() {
            let illicit = idx.iter().filter(|&&i| y[i] != 0).count();
            let licit = idx.len() - illicit;
            nodes[slot] = Node::Leaf { illicit: illicit as u32, licit: licit as u32 };
            let stop = illicit == 0
                || licit == 0
                || idx.len() < cfg.min_samples_split.max(2)
                || cfg.max_depth.is_some_and(|m| depth >= m);
            if stop {
                continue;
            }
            rng.shuffle(&mut features);
            let mut best: Option<Best> = None;
            for (visited, &f) in features.iter().enumerate() {
                if visited >= k && best.is_some() {
                    break;
                }
                pairs.clear();
                pairs.extend(idx.iter().map(|&i| (x.get(i, f), y[i])));
                pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                if let Some(cand) = best_split_on(&pairs, f, illicit, cfg.min_samples_leaf) {
                    let better = match &best {
                        None => true,
                        Some(b) => (cand.proxy, cand.feature, cand.threshold) < (b.proxy, b.feature, b.threshold),
                    };
                    if better {
                        best = Some(cand);
                    }
                }
            }
            let Some(best) = best else { continue };
            let (l, r): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| x.get(i, best.feature) <= best.threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf { illicit: 0, licit: 0 });
            let right = nodes.len();
            nodes.push(Node::Leaf { illicit: 0, licit: 0 });
            nodes[slot] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
            stack.push((right, r, depth + 1));
            stack.push((left, l, depth + 1));
        }
        Ok(Self { nodes })
    }

    fn leaf(&self, x: &[f64]) -> (u32, u32) {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { illicit, licit } => return (illicit, licit),
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    /// Majority vote of the reached leaf; ties vote licit.
    pub fn votes_illicit(&self, x: &[f64]) -> bool {
        let (i, l) = self.leaf(x);
        i > l
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, at: usize) -> usize {
            match t.nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

/// Lowest-impurity split of sorted `(value, label)` pairs, or `None` when the
/// feature is constant or `min_leaf` cannot be met.
///
/// The returned proxy is `-(sum_c nL_c^2 / nL + sum_c nR_c^2 / nR)`, which
/// orders splits exactly as the weighted Gini impurity does.
fn best_split_on(pairs: &[(f64, u8)], feature: usize, illicit: usize, min_leaf: usize) -> Option<Best> {
    let n = pairs.len();
    let mut best: Option<Best> = None;
    let mut left_pos = 0usize;
    for j in 0..n - 1 {
        left_pos += usize::from(pairs[j].1 != 0);
        let nl = j + 1;
        let nr = n - nl;
        if pairs[j].0 == pairs[j + 1].0 || nl < min_leaf || nr < min_leaf {
            continue;
        }
        let right_pos = illicit - left_pos;
        let (lp, ln) = (left_pos as f64, (nl - left_pos) as f64);
        let (rp, rn) = (right_pos as f64, (nr - right_pos) as f64);
        let proxy = -((lp * lp + ln * ln) / nl as f64 + (rp * rp + rn * rn) / nr as f64);
        if best.as_ref().is_none_or(|b| proxy < b.proxy) {
            let (a, b) = (pairs[j].0, pairs[j + 1].0);
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            best = Some(Best { proxy, feature, threshold });
        }
    }
    best
}
