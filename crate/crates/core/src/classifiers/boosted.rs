use serde::{Deserialize, Serialize};

use super::{check_training_set, ClassifierError};
use crate::numkit::{sigmoid, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostedConfig {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum hessian sum per child.
    pub min_child_weight: f64,
    /// Minimum gain for a split.
    pub gamma: f64,
}

impl Default for BoostedConfig {
    fn default() -> Self {
        Self { n_rounds: 100, max_depth: 3, learning_rate: 0.1, lambda: 1.0, min_child_weight: 1.0, gamma: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegNode {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegNode>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                RegNode::Leaf { value } => return value,
                RegNode::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

/// Stagewise Newton boosting on log-loss. `score = sigmoid(base_score + eta * sum(tree(x)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub trees: Vec<RegressionTree>,
    pub base_score: f64,
    pub eta: f64,
    pub dims: usize,
}

impl BoostedModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.base_score + self.eta * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}

pub fn train_boosted(x: &Matrix, y: &[u8], cfg: &BoostedConfig) -> Result<BoostedModel, ClassifierError> {
    train_boosted_traced(x, y, cfg).map(|(m, _)| m)
}

/// Like [`train_boosted`], also returning the mean training log-loss before
/// the first round and after each round.
pub fn train_boosted_traced(
    x: &Matrix,
    y: &[u8],
    cfg: &BoostedConfig,
) -> Result<(BoostedModel, Vec<f64>), ClassifierError> {
    check_training_set(x, y)?;
    if cfg.learning_rate < 0.0 || cfg.lambda < 0.0 || cfg.max_depth == 0 {
        return Err(ClassifierError::InvalidConfig(
            "learning_rate and lambda must be >= 0, max_depth >= 1".into(),
        ));
    }
    let n = x.nrows();
    let d = x.ncols();
    let prior = y.iter().filter(|&&v| v != 0).count() as f64 / n as f64;
    let base_score = (prior / (1.0 - prior)).ln();

    // Row indices sorted by each feature's value, computed once.
    let sorted: Vec<Vec<u32>> = crate::par::map_range(d, |f| {
        let mut idx: Vec<u32> = (0..n as u32).collect();
        idx.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)).then(a.cmp(&b)));
        idx
    });

    let mut margin = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    let mut losses = vec![mean_log_loss(&margin, y)];
    for _ in 0..cfg.n_rounds {
        for i in 0..n {
            let p = sigmoid(margin[i]);
            grad[i] = p - f64::from(y[i]);
            hess[i] = p * (1.0 - p);
        }
        let tree = grow_tree(x, &sorted, &grad, &hess, cfg);
        for (i, m) in margin.iter_mut().enumerate() {
            *m += cfg.learning_rate * tree.predict(x.row(i));
        }
        losses.push(mean_log_loss(&margin, y));
        trees.push(tree);
    }
    Ok((BoostedModel { trees, base_score, eta: cfg.learning_rate, dims: d }, losses))
}

fn mean_log_loss(margin: &[f64], y: &[u8]) -> f64 {
    // log(1 + e^m) - y*m, computed stably.
    let total: f64 = margin
        .iter()
        .zip(y)
        .map(|(&m, &t)| {
            let softplus = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
            softplus - f64::from(t) * m
        })
        .sum();
    total / y.len() as f64
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Level-wise exact greedy growth over presorted columns. Ties in gain keep
/// the first candidate found: lowest feature, then lowest threshold.
fn grow_tree(x: &Matrix, sorted: &[Vec<u32>], grad: &[f64], hess: &[f64], cfg: &BoostedConfig) -> RegressionTree {
    let n = x.nrows();
    let lambda = cfg.lambda;
    let mut nodes = vec![RegNode::Leaf { value: 0.0 }];
    // Node id of every row; usize::MAX once the row sits in a finished leaf.
    let mut position = vec![0usize; n];
    let mut frontier = vec![0usize];

    for depth in 0..=cfg.max_depth {
        if frontier.is_empty() {
            break;
        }
        let slot_of = |node: usize| frontier.iter().position(|&f| f == node);
        let mut g_sum = vec![0.0; frontier.len()];
        let mut h_sum = vec![0.0; frontier.len()];
        for i in 0..n {
            if let Some(s) = (position[i] != usize::MAX).then(|| slot_of(position[i])).flatten() {
                g_sum[s] += grad[i];
                h_sum[s] += hess[i];
            }
        }
        let mut best: Vec<Option<Candidate>> = vec![None; frontier.len()];
        if depth < cfg.max_depth {
            let mut node_slot = vec![usize::MAX; nodes.len()];
            for (s, &f) in frontier.iter().enumerate() {
                node_slot[f] = s;
            }
            let per_feature: Vec<Vec<Option<Candidate>>> = crate::par::map_range(sorted.len(), |f| {
                scan_feature(x, f, &sorted[f], &position, &node_slot, grad, hess, &g_sum, &h_sum, cfg)
            });
            for cands in per_feature {
                for (s, c) in cands.into_iter().enumerate() {
                    if let Some(c) = c {
                        if best[s].is_none_or(|b| c.gain > b.gain) {
                            best[s] = Some(c);
                        }
                    }
                }
            }
        }
        let mut next = Vec::new();
        let mut remap = vec![None; nodes.len() + 2 * frontier.len()];
        for (s, &node) in frontier.iter().enumerate() {
            match best[s] {
                Some(c) if c.gain > cfg.gamma.max(1e-12) => {
                    let left = nodes.len();
                    nodes.push(RegNode::Leaf { value: 0.0 });
                    let right = nodes.len();
                    nodes.push(RegNode::Leaf { value: 0.0 });
                    nodes[node] = RegNode::Split { feature: c.feature, threshold: c.threshold, left, right };
                    remap[node] = Some((c.feature, c.threshold, left, right));
                    next.push(left);
                    next.push(right);
                }
                _ => {
                    nodes[node] = RegNode::Leaf { value: -g_sum[s] / (h_sum[s] + lambda) };
                }
            }
        }
        for i in 0..n {
            let p = position[i];
            if p == usize::MAX {
                continue;
            }
            position[i] = match remap.get(p).copied().flatten() {
                Some((f, t, l, r)) => {
                    if x.get(i, f) <= t {
                        l
                    } else {
                        r
                    }
                }
                None => usize::MAX,
            };
        }
        frontier = next;
    }
    RegressionTree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn scan_feature(
    x: &Matrix,
    f: usize,
    order: &[u32],
    position: &[usize],
    node_slot: &[usize],
    grad: &[f64],
    hess: &[f64],
    g_sum: &[f64],
    h_sum: &[f64],
    cfg: &BoostedConfig,
) -> Vec<Option<Candidate>> {
    let m = g_sum.len();
    let lambda = cfg.lambda;
    let mut gl = vec![0.0; m];
    let mut hl = vec![0.0; m];
    let mut last = vec![f64::NAN; m];
    let mut best: Vec<Option<Candidate>> = vec![None; m];
    for &i in order {
        let i = i as usize;
        let p = position[i];
        if p == usize::MAX {
            continue;
        }
        let s = node_slot[p];
        if s == usize::MAX {
            continue;
        }
        let v = x.get(i, f);
        if !last[s].is_nan() && v != last[s] {
            let (g_l, h_l) = (gl[s], hl[s]);
            let (g_r, h_r) = (g_sum[s] - g_l, h_sum[s] - h_l);
            if h_l >= cfg.min_child_weight && h_r >= cfg.min_child_weight {
                let gain = 0.5
                    * (g_l * g_l / (h_l + lambda) + g_r * g_r / (h_r + lambda)
                        - g_sum[s] * g_sum[s] / (h_sum[s] + lambda));
                if best[s].is_none_or(|b| gain > b.gain) {
                    let a = last[s];
                    let mut threshold = a + (v - a) / 2.0;
                    if threshold >= v {
                        threshold = a;
                    }
                    best[s] = Some(Candidate { gain, feature: f, threshold });
                }
            }
        }
        gl[s] += grad[i];
        hl[s] += hess[i];
        last[s] = v;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::fixtures::blobs;

    #[test]
    fn loss_decreases_every_round_on_separable_data() {
        let (x, y) = blobs(60, 3, 2.0, 3);
        let cfg = BoostedConfig { n_rounds: 30, ..Default::default() };
        let (_, losses) = train_boosted_traced(&x, &y, &cfg).unwrap();
        for w in losses.windows(2) {
            assert!(w[1] < w[0], "{losses:?}");
        }
    }

    #[test]
    fn loss_is_non_increasing_on_noisy_data() {
        let (x, y) = blobs(200, 4, 0.3, 9);
        let (_, losses) = train_boosted_traced(&x, &y, &BoostedConfig::default()).unwrap();
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn zero_learning_rate_returns_the_prior() {
        let (x, y) = blobs(30, 2, 1.0, 0);
        let cfg = BoostedConfig { learning_rate: 0.0, n_rounds: 5, ..Default::default() };
        let m = train_boosted(&x, &y, &cfg).unwrap();
        let prior = sigmoid(m.base_score);
        assert!((prior - 0.5).abs() < 1e-12);
        for row in x.rows() {
            assert_eq!(m.score(row), prior);
        }
    }

    #[test]
    fn depth_is_bounded() {
        let (x, y) = blobs(100, 3, 0.2, 4);
        let m = train_boosted(&x, &y, &BoostedConfig { n_rounds: 5, max_depth: 2, ..Default::default() }).unwrap();
        for t in &m.trees {
            let splits = t.nodes.iter().filter(|n| matches!(n, RegNode::Split { .. })).count();
            assert!(splits <= 3);
        }
    }

    #[test]
    fn margin_ranking_equals_score_ranking() {
        let (x, y) = blobs(80, 3, 0.4, 12);
        let m = train_boosted(&x, &y, &BoostedConfig { n_rounds: 20, ..Default::default() }).unwrap();
        let margins: Vec<f64> = x.rows().map(|r| m.margin(r)).collect();
        let scores: Vec<f64> = x.rows().map(|r| m.score(r)).collect();
        assert_eq!(crate::metrics::ranked_desc(&margins), crate::metrics::ranked_desc(&scores));
    }
}
