use crate::numkit::{Matrix, NeighborIndex, Neighbors};
use crate::par;

use super::DetectorError;

/// Guards the local reachability density against duplicate points.
const LRD_EPS: f64 = 1e-10;

/// Local outlier factor fitted on a reference set, scoring unseen points
/// against it (novelty mode).
#[derive(Debug, Clone)]
pub struct LofModel {
    index: NeighborIndex,
    k: usize,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
}

impl LofModel {
    pub fn fit(reference: &Matrix, k: usize) -> Result<Self, DetectorError> {
        let index = NeighborIndex::new(reference.clone());
        let neighbors = par::try_map_range(reference.nrows(), |i| index.query_member(i, k))?;
        let k_distance: Vec<f64> = neighbors.iter().map(|n| n.kth_distance().unwrap_or(0.0)).collect();
        let lrd = neighbors.iter().map(|n| local_density(n, &k_distance)).collect();
        Ok(Self { index, k, k_distance, lrd })
    }

    pub fn k_distance(&self) -> &[f64] {
        &self.k_distance
    }

    pub fn reference_lrd(&self) -> &[f64] {
        &self.lrd
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, DetectorError> {
        let n = self.index.query(x, self.k)?;
        let own = local_density(&n, &self.k_distance);
        let mean_neighbor: f64 = n.items.iter().map(|o| self.lrd[o.id]).sum::<f64>() / n.items.len() as f64;
        Ok(mean_neighbor / own)
    }
}

fn local_density(n: &Neighbors, k_distance: &[f64]) -> f64 {
    let reach: f64 = n.items.iter().map(|o| o.distance.max(k_distance[o.id])).sum();
    1.0 / (reach / n.items.len() as f64 + LRD_EPS)
}

pub fn lof_scores(reference: &Matrix, targets: &Matrix, k: usize) -> Result<Vec<f64>, DetectorError> {
    let model = LofModel::fit(reference, k)?;
    par::try_map_range(targets.nrows(), |i| model.score(targets.row(i)))
}
