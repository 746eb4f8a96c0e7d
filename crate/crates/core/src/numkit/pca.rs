use nalgebra::{DMatrix, SymmetricEigen};

use super::{Matrix, NumError};

/// Principal axes of a point cloud.
///
/// `eigenvectors` stores one unit eigenvector per column, ordered by
/// descending eigenvalue. Each column's largest-magnitude component is
/// positive (first index wins on magnitude ties).
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub eigenvectors: Matrix,
    pub eigenvalues: Vec<f64>,
}

pub fn pca_fit(points: &Matrix) -> Result<PcaModel, NumError> {
    if points.nrows() < 2 {
        return Err(NumError::InsufficientPoints { needed: 2, found: points.nrows() });
    }
    let d = points.ncols();
    let mean = points.column_means();
    let cov = points.covariance(&mean);
    let dm = DMatrix::from_row_slice(d, d, cov.as_slice());
    let eig = SymmetricEigen::try_new(dm, f64::EPSILON, 10_000)
        .ok_or_else(|| NumError::DecompositionFailure("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut vectors = Matrix::zeros(d, d);
    let mut values = Vec::with_capacity(d);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 1..d {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            vectors.row_mut(i)[col] = sign * v[i];
        }
        values.push(eig.eigenvalues[src].max(0.0));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(NumError::DecompositionFailure("non-finite eigenvalue".into()));
    }
    Ok(PcaModel { mean, eigenvectors: vectors, eigenvalues: values })
}

impl PcaModel {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    /// Coordinates of `x - mean` in the eigenbasis.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, NumError> {
        let d = self.dims();
        if x.len() != d {
            return Err(NumError::DimensionMismatch { expected: d, found: x.len() });
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        let mut out = vec![0.0; d];
        for i in 0..d {
            let row = self.eigenvectors.row(i);
            let c = centered[i];
            for (o, v) in out.iter_mut().zip(row) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    /// Inverse of [`project`](Self::project) using all components.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        (0..self.dims())
            .map(|i| self.mean[i] + crate::numkit::dot(self.eigenvectors.row(i), coords))
            .collect()
    }
}
