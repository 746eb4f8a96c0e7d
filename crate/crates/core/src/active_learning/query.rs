use crate::classifiers::LogisticModel;
use crate::numkit::{dot, sigmoid, Matrix};
use crate::par;

/// Positions of the `b` largest `keys`, ties by ascending position.
pub fn top_b(keys: &[f64], b: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&i, &j| keys[j].total_cmp(&keys[i]).then(i.cmp(&j)));
    order.truncate(b);
    order
}

/// Positions of the `b` scores closest to 0.5, ties by ascending position.
///
/// Callers pass the unlabeled pool in ascending tx_id order, so position
/// ties resolve to ascending tx_id.
pub fn query_uncertainty(scores: &[f64], b: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| (scores[i] - 0.5).abs().total_cmp(&(scores[j] - 0.5).abs()).then(i.cmp(&j)));
    order.truncate(b);
    order
}

/// Expected gradient length of the single-example log-loss under the
/// model's own label distribution:
/// `sum_y P(y|x) * |(sigma - y) (x, 1)| = 2 sigma (1 - sigma) |(x, 1)|`.
pub fn egl(model: &LogisticModel, x: &[f64]) -> f64 {
    let s = sigmoid(model.margin(x));
    2.0 * s * (1.0 - s) * (dot(x, x) + 1.0).sqrt()
}

/// Positions of the `b` rows with the largest expected gradient length.
pub fn query_expected_model_change(model: &LogisticModel, x: &Matrix, b: usize) -> (Vec<usize>, Vec<f64>) {
    let lengths = par::map_range(x.nrows(), |i| egl(model, x.row(i)));
    (top_b(&lengths, b), lengths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::LogisticConfig;

    #[test]
    fn uncertainty_example() {
        assert_eq!(query_uncertainty(&[0.01, 0.49, 0.95, 0.52], 2), vec![1, 3]);
        assert_eq!(query_uncertainty(&[1.0; 5], 3), vec![0, 1, 2]);
        assert_eq!(query_uncertainty(&[0.2, 0.9], 10), vec![0, 1]);
    }

    fn model(w: Vec<f64>, b: f64) -> LogisticModel {
        LogisticModel { weights: w, bias: b, config: LogisticConfig::default() }
    }

    #[test]
    fn egl_prefers_uncertain_and_large() {
        // Equal norms, margins 0 and ~4.6 (sigma 0.99).
        let m = model(vec![1.0, 0.0], 0.0);
        let x = Matrix::from_rows(&[[4.595, 0.0], [0.0, 4.595]], 2).unwrap();
        assert_eq!(query_expected_model_change(&m, &x, 1).0, vec![1]);
        // Equal sigma, norms 1 and 10.
        let m = model(vec![0.0, 0.0], 0.3);
        let x = Matrix::from_rows(&[[1.0, 0.0], [10.0, 0.0]], 2).unwrap();
        assert_eq!(query_expected_model_change(&m, &x, 1).0, vec![1]);
    }
}
