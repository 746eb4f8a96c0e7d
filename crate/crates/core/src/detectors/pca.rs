use crate::numkit::{pca_fit, Matrix};
use crate::par;

use super::DetectorError;

/// Sum over principal components of `proj^2 / eigenvalue` (squared
/// Mahalanobis distance in the eigenbasis). Components whose eigenvalue is
/// numerically zero carry no variance scale and are skipped.
pub fn pca_scores(reference: &Matrix, targets: &Matrix) -> Result<Vec<f64>, DetectorError> {
    let model = pca_fit(reference)?;
    let top = model.eigenvalues.first().copied().unwrap_or(0.0);
    let tol = top * model.dims() as f64 * f64::EPSILON;
    let keep: Vec<usize> = (0..model.eigenvalues.len()).filter(|&i| model.eigenvalues[i] > tol).collect();
    let scores = par::try_map_range(targets.nrows(), |i| {
        let proj = model.project(targets.row(i))?;
        Ok::<f64, DetectorError>(keep.iter().map(|&c| proj[c] * proj[c] / model.eigenvalues[c]).sum())
    })?;
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_variances() {
        // Variance 4 on x, 1 on y (sample covariance, divisor n-1).
        let reference = Matrix::from_rows(&[[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0], [0.0, -1.0]], 2).unwrap();
        let var_x = 8.0 / 3.0;
        let var_y = 2.0 / 3.0;
        let targets = Matrix::from_rows(&[[1.0, 1.0]], 2).unwrap();
        let s = pca_scores(&reference, &targets).unwrap();
        assert!((s[0] - (1.0 / var_x + 1.0 / var_y)).abs() < 1e-10);
    }

    #[test]
    fn degenerate_direction_is_skipped() {
        let reference = Matrix::from_rows(&[[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]], 2).unwrap();
        let targets = Matrix::from_rows(&[[2.0, 5.0]], 2).unwrap();
        let s = pca_scores(&reference, &targets).unwrap();
        assert!(s[0].is_finite() && s[0].abs() < 1e-9);
    }
}
