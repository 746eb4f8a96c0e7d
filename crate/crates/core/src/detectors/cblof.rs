use crate::numkit::{sq_dist, Matrix, SeededRng};
use crate::par;

use super::DetectorError;

const MAX_ITER: usize = 300;
const TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Matrix,
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
}

/// Lloyd's algorithm from a k-means++ seeding.
///
/// Stops when the total squared centroid movement falls below `TOL` times
/// the mean per-feature variance. Empty clusters keep their last centroid.
pub fn kmeans(x: &Matrix, k: usize, seed: u64) -> KMeansResult {
    let n = x.nrows();
    let d = x.ncols();
    let mut rng = SeededRng::new(seed);
    let mut centroids = Matrix::zeros(k, d);
    let first = rng.below(n);
    centroids.row_mut(0).copy_from_slice(x.row(first));
    let mut closest: Vec<f64> = x.rows().map(|r| sq_dist(r, x.row(first))).collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, w) in closest.iter().enumerate() {
                acc += w;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.below(n)
        };
        centroids.row_mut(c).copy_from_slice(x.row(pick));
        for (i, r) in x.rows().enumerate() {
            closest[i] = closest[i].min(sq_dist(r, x.row(pick)));
        }
    }

    let mean = x.column_means();
    let scale = (0..d)
        .map(|j| x.rows().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n as f64)
        .sum::<f64>()
        / d.max(1) as f64;
    let tol = TOL * scale;

    let mut labels = assign(x, &centroids);
    for _ in 0..MAX_ITER {
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, v) in sums.row_mut(l).iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        let mut shift = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let new: Vec<f64> = sums.row(c).iter().map(|s| s / counts[c] as f64).collect();
            shift += sq_dist(&new, centroids.row(c));
            centroids.row_mut(c).copy_from_slice(&new);
        }
        labels = assign(x, &centroids);
        if shift <= tol {
            break;
        }
    }
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    KMeansResult { centroids, labels, sizes }
}

fn nearest(row: &[f64], centroids: &Matrix, allowed: impl Iterator<Item = usize>) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for c in allowed {
        let d = sq_dist(row, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(x: &Matrix, centroids: &Matrix) -> Vec<usize> {
    par::map_range(x.nrows(), |i| nearest(x.row(i), centroids, 0..centroids.nrows()).0)
}

/// Splits clusters into large and small.
///
/// Clusters are ordered by size (descending, ties by index). A boundary `b`
/// qualifies on alpha when the first `b` clusters hold at least `alpha * n`
/// points, and on beta when `size[b-1] / size[b] >= beta`. The first boundary
/// satisfying both wins, then the first alpha-only, then the first beta-only.
/// Returns `None` when no boundary qualifies.
pub(crate) fn large_clusters(sizes: &[usize], alpha: f64, beta: f64) -> Option<Vec<usize>> {
    let n: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut alpha_ok = Vec::new();
    let mut beta_ok = Vec::new();
    let mut cum = 0usize;
    for b in 1..sizes.len() {
        cum += sizes[order[b - 1]];
        if cum as f64 >= n as f64 * alpha {
            alpha_ok.push(b);
        }
        let (hi, lo) = (sizes[order[b - 1]] as f64, sizes[order[b]] as f64);
        if lo == 0.0 || hi / lo >= beta {
            beta_ok.push(b);
        }
    }
    let boundary = alpha_ok
        .iter()
        .find(|b| beta_ok.contains(b))
        .or_else(|| alpha_ok.first())
        .or_else(|| beta_ok.first())?;
    Some(order[..*boundary].to_vec())
}

/// Cluster-based local outlier score: distance to the nearest centroid of a
/// large cluster. When no large/small boundary exists every cluster is
/// treated as large and a note is returned.
pub fn cblof_scores(
    reference: &Matrix,
    targets: &Matrix,
    n_clusters: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
) -> Result<(Vec<f64>, Option<String>), DetectorError> {
    let km = kmeans(reference, n_clusters, seed);
    let (large, note) = match large_clusters(&km.sizes, alpha, beta) {
        Some(l) => (l, None),
        None => (
            (0..n_clusters).collect(),
            Some("cblof: no valid large/small cluster separation; all clusters treated as large".to_string()),
        ),
    };
    let scores = par::map_range(targets.nrows(), |i| nearest(targets.row(i), &km.centroids, large.iter().copied()).1.sqrt());
    Ok((scores, note))
}
