use super::{Matrix, NumError};

/// Multivariate Gaussian with a ridge-regularised covariance.
///
/// `covariance` already includes `ridge * I`. The precision matrix is
/// obtained from a Cholesky factorisation of that covariance.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
    pub precision: Matrix,
    pub ridge: f64,
    /// Lower-triangular Cholesky factor of `covariance`, row-major.
    chol: Matrix,
}

/// Fits mean and sample covariance (divisor `n - 1`) plus `ridge * I`.
pub fn fit_gaussian(points: &Matrix, ridge: f64) -> Result<GaussianModel, NumError> {
    if points.nrows() < 2 {
        return Err(NumError::InsufficientPoints { needed: 2, found: points.nrows() });
    }
    let mean = points.column_means();
    let mut covariance = points.covariance(&mean);
    let d = points.ncols();
    for i in 0..d {
        covariance.row_mut(i)[i] += ridge;
    }
    let chol = cholesky(&covariance).ok_or(NumError::SingularAfterRidge { ridge })?;
    let precision = inverse_from_cholesky(&chol);
    Ok(GaussianModel { mean, covariance, precision, ridge, chol })
}

impl GaussianModel {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    /// `sqrt((x - mean)^T covariance^-1 (x - mean))`, via a triangular solve.
    pub fn mahalanobis(&self, x: &[f64]) -> Result<f64, NumError> {
        let d = self.dims();
        if x.len() != d {
            return Err(NumError::DimensionMismatch { expected: d, found: x.len() });
        }
        let mut y: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        forward_substitute(&self.chol, &mut y);
        Ok(y.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

/// Lower Cholesky factor of a symmetric matrix; `None` if not positive definite.
fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.nrows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a.get(j, j);
        {
            let lj = l.row(j);
            diag -= lj[..j].iter().map(|v| v * v).sum::<f64>();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let djj = diag.sqrt();
        l.row_mut(j)[j] = djj;
        for i in (j + 1)..n {
            let s: f64 = {
                let (li, lj) = (l.row(i), l.row(j));
                li[..j].iter().zip(&lj[..j]).map(|(a, b)| a * b).sum()
            };
            l.row_mut(i)[j] = (a.get(i, j) - s) / djj;
        }
    }
    Some(l)
}

/// Solves `L y = b` in place.
fn forward_substitute(l: &Matrix, b: &mut [f64]) {
    let n = l.nrows();
    for i in 0..n {
        let row = l.row(i);
        let s: f64 = row[..i].iter().zip(&b[..i]).map(|(a, c)| a * c).sum();
        b[i] = (b[i] - s) / row[i];
    }
}

/// Solves `L^T x = b` in place.
fn backward_substitute(l: &Matrix, b: &mut [f64]) {
    let n = l.nrows();
    for i in (0..n).rev() {
        let mut s = 0.0;
        for k in (i + 1)..n {
            s += l.get(k, i) * b[k];
        }
        b[i] = (b[i] - s) / l.get(i, i);
    }
}

fn inverse_from_cholesky(l: &Matrix) -> Matrix {
    let n = l.nrows();
    let mut inv = Matrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|v| *v = 0.0);
        col[j] = 1.0;
        forward_substitute(l, &mut col);
        backward_substitute(l, &mut col);
        for i in 0..n {
            inv.row_mut(i)[j] = col[i];
        }
    }
    // Symmetrise away rounding noise.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (inv.get(i, j) + inv.get(j, i));
            inv.row_mut(i)[j] = v;
            inv.row_mut(j)[i] = v;
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::SeededRng;

    fn identity_error(m: &GaussianModel) -> f64 {
        let d = m.dims();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let v: f64 = (0..d).map(|k| m.precision.get(i, k) * m.covariance.get(k, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    #[test]
    fn duplicate_points_give_ridge_covariance() {
        let pts = Matrix::from_rows(&[vec![1.5, -2.0, 3.0], vec![1.5, -2.0, 3.0]], 3).unwrap();
        let g = fit_gaussian(&pts, 0.1).unwrap();
        assert_eq!(g.mean, vec![1.5, -2.0, 3.0]);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.1 } else { 0.0 };
                assert!((g.covariance.get(i, j) - expect).abs() < 1e-15);
            }
        }
        assert_eq!(g.mahalanobis(&g.mean).unwrap(), 0.0);
    }

    #[test]
    fn euclidean_special_case() {
        // Two points give covariance [[2,0],[0,0]]; ridge makes the second axis unit.
        let pts = Matrix::from_rows(&[vec![-1.0, 0.0], vec![1.0, 0.0]], 2).unwrap();
        let g = fit_gaussian(&pts, 0.0);
        assert!(matches!(g, Err(NumError::SingularAfterRidge { .. })));
        // Build an identity-covariance model directly from four symmetric points.
        let pts = Matrix::from_rows(
            &[vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0]],
            2,
        )
        .unwrap();
        // covariance = 4/3 I; rescale so it is exactly I.
        let s = (3.0f64 / 4.0).sqrt();
        let pts = Matrix::new(4, 2, pts.as_slice().iter().map(|v| v * s).collect()).unwrap();
        let g = fit_gaussian(&pts, 0.0).unwrap();
        let d = g.mahalanobis(&[3.0, 4.0]).unwrap();
        assert!((d - 5.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn rank_deficient_high_dim_is_regularised() {
        let mut rng = SeededRng::new(5);
        let d = 166;
        let data: Vec<f64> = (0..3 * d).map(|_| rng.uniform() - 0.5).collect();
        let pts = Matrix::new(3, d, data).unwrap();
        let g = fit_gaussian(&pts, 1e-3).unwrap();
        assert!(identity_error(&g) < 1e-6);
        assert!(g.mahalanobis(pts.row(0)).unwrap() > 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let pts = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], 2).unwrap();
        let g = fit_gaussian(&pts, 1.0).unwrap();
        assert!(matches!(g.mahalanobis(&[0.0]), Err(NumError::DimensionMismatch { .. })));
        assert!(fit_gaussian(&Matrix::zeros(1, 2), 1.0).is_err());
    }
}
