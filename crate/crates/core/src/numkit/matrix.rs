use serde::{Deserialize, Serialize};

use super::NumError;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumError> {
        if data.len() != rows * cols {
            return Err(NumError::Shape { rows, cols, len: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds a matrix from equally sized rows. An empty input yields a
    /// `0 x cols` matrix where `cols` is taken from the caller.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], cols: usize) -> Result<Self, NumError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(NumError::DimensionMismatch { expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }

    /// Column means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for r in self.rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        if self.rows > 0 {
            let n = self.rows as f64;
            mean.iter_mut().for_each(|m| *m /= n);
        }
        mean
    }

    /// Sample covariance with divisor `n - 1`, as a dense `d x d` row-major matrix.
    pub fn covariance(&self, mean: &[f64]) -> Matrix {
        let d = self.cols;
        let mut cov = vec![0.0; d * d];
        let mut centered = vec![0.0; d];
        for r in self.rows() {
            for j in 0..d {
                centered[j] = r[j] - mean[j];
            }
            for a in 0..d {
                let ca = centered[a];
                if ca == 0.0 {
                    continue;
                }
                let row = &mut cov[a * d..(a + 1) * d];
                for b in a..d {
                    row[b] += ca * centered[b];
                }
            }
        }
        let denom = (self.rows.max(2) - 1) as f64;
        for a in 0..d {
            for b in a..d {
                let v = cov[a * d + b] / denom;
                cov[a * d + b] = v;
                cov[b * d + a] = v;
            }
        }
        Matrix { rows: d, cols: d, data: cov }
    }

    pub fn check_finite(&self) -> Result<(), NumError> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(NumError::NonFinite { row: p / self.cols.max(1), col: p % self.cols.max(1) }),
            None => Ok(()),
        }
    }

    /// Appends the rows of `other` below `self`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix, NumError> {
        if self.cols != other.cols {
            return Err(NumError::DimensionMismatch { expected: self.cols, found: other.cols });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix { rows: self.rows + other.rows, cols: self.cols, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_of_two_points() {
        let m = Matrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 4.0]], 2).unwrap();
        let mean = m.column_means();
        assert_eq!(mean, vec![1.0, 2.0]);
        let c = m.covariance(&mean);
        assert_eq!(c.as_slice(), &[2.0, 4.0, 4.0, 8.0]);
    }

    #[test]
    fn shape_is_checked() {
        assert!(Matrix::new(2, 3, vec![0.0; 5]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]], 1).is_err());
    }
}
