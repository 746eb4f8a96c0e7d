use serde::{Deserialize, Serialize};

use crate::numkit::{Matrix, SeededRng};
use crate::par;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Expected path length of an unsuccessful search in a BST of `n` points,
/// used to normalise isolation depths.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let m = (n - 1) as f64;
            2.0 * (m.ln() + EULER_GAMMA) - 2.0 * m / n as f64
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum INode {
    Leaf { size: usize },
    Split { feature: usize, threshold: f64, left: Box<INode>, right: Box<INode> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsolationForest {
    trees: Vec<INode>,
    subsample: usize,
}

impl IsolationForest {
    /// Tree `t` draws its subsample and splits from RNG stream `t`, so the
    /// forest is identical in parallel and sequential builds.
    pub fn fit(reference: &Matrix, n_trees: usize, subsample: usize, seed: u64) -> Self {
        let psi = subsample.min(reference.nrows()).max(1);
        let limit = (psi as f64).log2().ceil() as usize;
        let trees = par::map_range(n_trees, |t| {
            let mut rng = SeededRng::with_stream(seed, t as u64);
            let mut sample = rng.sample_indices(reference.nrows(), psi);
            sample.sort_unstable();
            grow(reference, &mut sample, 0, limit, &mut rng)
        });
        Self { trees, subsample: psi }
    }

    pub fn subsample(&self) -> usize {
        self.subsample
    }

    pub fn mean_path_length(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| path_length(t, x)).sum::<f64>() / self.trees.len() as f64
    }

    /// `2^(-E[h(x)] / c(psi))`, in (0, 1].
    pub fn score_row(&self, x: &[f64]) -> f64 {
        let c = average_path_length(self.subsample);
        if c == 0.0 {
            return 0.5;
        }
        2f64.powf(-self.mean_path_length(x) / c)
    }

    pub fn score(&self, targets: &Matrix) -> Vec<f64> {
        par::map_range(targets.nrows(), |i| self.score_row(targets.row(i)))
    }
}

fn grow(x: &Matrix, idx: &mut [usize], depth: usize, limit: usize, rng: &mut SeededRng) -> INode {
    if depth >= limit || idx.len() <= 1 {
        return INode::Leaf { size: idx.len() };
    }
    let d = x.ncols();
    let ranges: Vec<(usize, f64, f64)> = (0..d)
        .filter_map(|f| {
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = x.get(i, f);
                (lo.min(v), hi.max(v))
            });
            (hi > lo).then_some((f, lo, hi))
        })
        .collect();
    if ranges.is_empty() {
        return INode::Leaf { size: idx.len() };
    }
    let (feature, lo, hi) = ranges[rng.below(ranges.len())];
    let mut threshold = lo + rng.uniform() * (hi - lo);
    if threshold <= lo {
        threshold = lo + (hi - lo) * 0.5;
    }
    // Partition: values < threshold go left.
    let mut split = 0;
    for k in 0..idx.len() {
        if x.get(idx[k], feature) < threshold {
            idx.swap(k, split);
            split += 1;
        }
    }
    let (l, r) = idx.split_at_mut(split);
    INode::Split {
        feature,
        threshold,
        left: Box::new(grow(x, l, depth + 1, limit, rng)),
        right: Box::new(grow(x, r, depth + 1, limit, rng)),
    }
}

fn path_length(mut node: &INode, x: &[f64]) -> f64 {
    let mut depth = 0.0;
    loop {
        match node {
            INode::Leaf { size } => return depth + average_path_length(*size),
            INode::Split { feature, threshold, left, right } => {
                node = if x[*feature] < *threshold { left } else { right };
                depth += 1.0;
            }
        }
    }
}
