use crate::numkit::{dot, Matrix, NeighborIndex};
use crate::par;

use super::DetectorError;

/// Fast angle-based outlier score over the k nearest reference rows.
///
/// For every pair of neighbours (a, b) of x the weighted cosine
/// `<a-x, b-x> / (|a-x|^2 |b-x|^2)` is collected and the score is the negated
/// population variance, so points seen under a narrow spread of angles score
/// high. Neighbours coinciding with x are skipped; if no pair remains the
/// variance is taken as 0.
pub fn abod_scores(reference: &Matrix, targets: &Matrix, k: usize) -> Result<Vec<f64>, DetectorError> {
    let index = NeighborIndex::new(reference.clone());
    par::try_map_range(targets.nrows(), |i| {
        let x = targets.row(i);
        let n = index.query(x, k)?;
        let ids: Vec<usize> = n.items.iter().map(|o| o.id).collect();
        Ok(-angle_variance(x, reference, &ids))
    })
}

/// Population variance of the weighted cosines over neighbour pairs.
pub(crate) fn angle_variance(x: &[f64], points: &Matrix, ids: &[usize]) -> f64 {
    let diffs: Vec<Vec<f64>> = ids
        .iter()
        .map(|&j| points.row(j).iter().zip(x).map(|(a, b)| a - b).collect())
        .collect();
    let norms: Vec<f64> = diffs.iter().map(|d| dot(d, d)).collect();
    let mut values = Vec::new();
    for a in 0..diffs.len() {
        for b in a + 1..diffs.len() {
            if norms[a] == 0.0 || norms[b] == 0.0 {
                continue;
            }
            values.push(dot(&diffs[a], &diffs[b]) / (norms[a] * norms[b]));
        }
    }
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_neighbour_variance_is_zero() {
        // One pair only: variance of a single value.
        let pts = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]], 2).unwrap();
        assert_eq!(angle_variance(&[0.0, 0.0], &pts, &[0, 1]), 0.0);
    }

    #[test]
    fn hand_computed_three_neighbours() {
        let pts = Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0], [-1.0, 0.0]], 2).unwrap();
        // Pairs: (0,1) -> 0, (0,2) -> -1/(1*1) = -1, (1,2) -> 0.
        let vals = [0.0_f64, -1.0, 0.0];
        let mean = vals.iter().sum::<f64>() / 3.0;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
        assert!((angle_variance(&[0.0, 0.0], &pts, &[0, 1, 2]) - var).abs() < 1e-15);
    }

    #[test]
    fn coincident_neighbour_skipped() {
        let pts = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 2).unwrap();
        assert_eq!(angle_variance(&[0.0, 0.0], &pts, &[0, 1, 2]), 0.0);
    }
}
