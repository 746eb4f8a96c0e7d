use crate::numkit::{fit_gaussian, Matrix};
use crate::par;

use super::DetectorError;

/// Mahalanobis distance under a Gaussian fitted to the reference with
/// `ridge * I` added to the covariance.
pub fn elliptic_scores(reference: &Matrix, targets: &Matrix, ridge: f64) -> Result<Vec<f64>, DetectorError> {
    let model = fit_gaussian(reference, ridge)?;
    Ok(par::try_map_range(targets.nrows(), |i| model.mahalanobis(targets.row(i)))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_reference_is_regularised() {
        let reference = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], 2).unwrap();
        let targets = Matrix::from_rows(&[[1.0, 1.0], [1.0, -1.0]], 2).unwrap();
        let s = elliptic_scores(&reference, &targets, 1e-3).unwrap();
        assert!(s[0].abs() < 1e-12);
        // Along (1,1) the variance is 2 + ridge; across it only the ridge.
        let expected = (2.0 / (2.0 + 1e-3) + 2.0 / 1e-3_f64).sqrt();
        assert!((s[1] - expected).abs() < 1e-6, "{s:?}");
    }
}
