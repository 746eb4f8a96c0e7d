use crate::numkit::{Matrix, NeighborIndex};
use crate::par;

use super::DetectorError;

/// Distance from each target to its k-th nearest reference row.
pub fn knn_scores(reference: &Matrix, targets: &Matrix, k: usize) -> Result<Vec<f64>, DetectorError> {
    let index = NeighborIndex::new(reference.clone());
    let scores = par::try_map_range(targets.nrows(), |i| {
        index.query(targets.row(i), k).map(|n| n.kth_distance().unwrap_or(0.0))
    })?;
    Ok(scores)
}
