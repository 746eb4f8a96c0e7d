use serde::{Deserialize, Serialize};

use super::{check_training_set, ClassifierError};
use crate::numkit::{dot, sigmoid, Matrix};

/// Full-batch gradient descent on the L2-regularised mean log-loss
/// `(1/n) * sum(loss) + l2 / (2n) * |w|^2` (bias unpenalised), which has the
/// same minimiser as the `C = 1 / l2` formulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    /// Fixed step size; `None` uses `1 / L` from a power-iteration bound on
    /// the loss curvature.
    pub learning_rate: Option<f64>,
    pub epochs: usize,
    pub l2: f64,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { learning_rate: None, epochs: 1000, l2: 1.0, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    #[serde(default)]
    pub config: LogisticConfig,
}

impl LogisticModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}

/// Gradient of the single-example log-loss with respect to `(w, b)`:
/// `(sigmoid(w.x + b) - y) * (x, 1)`.
pub fn logistic_gradient(model: &LogisticModel, x: &[f64], y: u8) -> Vec<f64> {
    let r = model.score(x) - f64::from(y);
    let mut g: Vec<f64> = x.iter().map(|v| r * v).collect();
    g.push(r);
    g
}

/// Training objective: mean log-loss plus `l2 / (2n) * |w|^2` (bias not
/// penalised).
pub fn objective(w: &[f64], b: f64, x: &Matrix, y: &[u8], l2: f64) -> f64 {
    let n = x.nrows() as f64;
    let loss: f64 = x
        .rows()
        .zip(y)
        .map(|(row, &label)| {
            let z = dot(w, row) + b;
            // log(1 + e^z) - y z, computed without overflow.
            let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            softplus - f64::from(label) * z
        })
        .sum();
    loss / n + l2 / (2.0 * n) * dot(w, w)
}

/// Gradient of [`objective`] with respect to `(w, b)`; the last entry is
/// the bias component.
pub fn objective_gradient(w: &[f64], b: f64, x: &Matrix, y: &[u8], l2: f64) -> Vec<f64> {
    let n = x.nrows() as f64;
    let d = w.len();
    let mut grad = vec![0.0; d + 1];
    for (row, &label) in x.rows().zip(y) {
        let r = sigmoid(dot(w, row) + b) - f64::from(label);
        for (g, v) in grad.iter_mut().zip(row) {
            *g += r * v;
        }
        grad[d] += r;
    }
    for (g, wi) in grad.iter_mut().zip(w) {
        *g += l2 * wi;
    }
    grad.iter_mut().for_each(|g| *g /= n);
    grad
}

pub fn train_logistic(x: &Matrix, y: &[u8], cfg: &LogisticConfig) -> Result<LogisticModel, ClassifierError> {
    check_training_set(x, y)?;
    if cfg.l2 < 0.0 || cfg.learning_rate.is_some_and(|lr| !(lr > 0.0)) {
        return Err(ClassifierError::InvalidConfig("l2 must be >= 0 and learning_rate > 0".into()));
    }
    let d = x.ncols();
    let step = cfg.learning_rate.unwrap_or_else(|| 1.0 / lipschitz_bound(x, cfg.l2));
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for _ in 0..cfg.epochs {
        let grad = objective_gradient(&w, b, x, y, cfg.l2);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < cfg.tolerance {
            break;
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= step * g;
        }
        b -= step * grad[d];
    }
    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(ClassifierError::InvalidConfig("training diverged; lower the learning rate".into()));
    }
    Ok(LogisticModel { weights: w, bias: b, config: cfg.clone() })
}

/// Upper bound on the Hessian's largest eigenvalue:
/// `lambda_max(X~^T X~) / (4n) + l2 / n`, where `X~` has a bias column.
fn lipschitz_bound(x: &Matrix, l2: f64) -> f64 {
    let n = x.nrows() as f64;
    let d = x.ncols() + 1;
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let mut next = vec![0.0; d];
        for row in x.rows() {
            let t = dot(row, &v[..d - 1]) + v[d - 1];
            for (nj, rj) in next.iter_mut().zip(row) {
                *nj += t * rj;
            }
            next[d - 1] += t;
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let converged = (norm - lambda).abs() <= 1e-9 * norm;
        lambda = norm;
        v = next.into_iter().map(|a| a / norm).collect();
        if converged {
            break;
        }
    }
    // Power iteration approaches from below; pad the estimate.
    (1.05 * lambda / (4.0 * n) + l2 / n).max(1e-12)
}
