use std::collections::HashMap;
use std::sync::Arc;

use crate::numkit::{dot, Matrix, SeededRng};
use crate::par;

use super::DetectorError;

/// Reference sets larger than this are subsampled before fitting.
pub const OCSVM_MAX_REFERENCE: usize = 5000;

const EPS: f64 = 1e-3;
const TAU: f64 = 1e-12;
const CACHE_BYTES: usize = 200 << 20;

/// One-class SVM with an RBF kernel, solved by SMO with second-order
/// working-set selection (no shrinking).
///
/// Dual: minimise `a^T Q a / 2` subject to `0 <= a_i <= 1` and
/// `sum a = nu * l`. The decision value is `sum a_i K(x_i, x) - rho` and the
/// anomaly score is its negation.
#[derive(Debug, Clone)]
pub struct OneClassSvm {
    support: Matrix,
    coef: Vec<f64>,
    sq_norms: Vec<f64>,
    rho: f64,
    gamma: f64,
    iterations: usize,
    fitted_rows: usize,
    original_rows: usize,
}

struct Kernel<'a> {
    x: &'a Matrix,
    sq: Vec<f64>,
    gamma: f64,
    cache: HashMap<usize, (Arc<Vec<f64>>, u64)>,
    capacity: usize,
    clock: u64,
}

impl<'a> Kernel<'a> {
    fn new(x: &'a Matrix, gamma: f64) -> Self {
        let sq = x.rows().map(|r| dot(r, r)).collect();
        let capacity = (CACHE_BYTES / (8 * x.nrows().max(1))).max(2);
        Self { x, sq, gamma, cache: HashMap::new(), capacity, clock: 0 }
    }

    fn eval(&self, i: usize, j: usize) -> f64 {
        rbf(self.gamma, self.sq[i], self.sq[j], dot(self.x.row(i), self.x.row(j)))
    }

    fn row(&mut self, i: usize) -> Arc<Vec<f64>> {
        self.clock += 1;
        let now = self.clock;
        if let Some((row, stamp)) = self.cache.get_mut(&i) {
            *stamp = now;
            return Arc::clone(row);
        }
        if self.cache.len() >= self.capacity {
            let oldest = self.cache.iter().min_by_key(|(_, (_, s))| *s).map(|(k, _)| *k);
            if let Some(k) = oldest {
                self.cache.remove(&k);
            }
        }
        let row = Arc::new(par::map_range(self.x.nrows(), |t| self.eval(i, t)));
        self.cache.insert(i, (Arc::clone(&row), now));
        row
    }
}

fn rbf(gamma: f64, sq_a: f64, sq_b: f64, ab: f64) -> f64 {
    (-gamma * (sq_a + sq_b - 2.0 * ab).max(0.0)).exp()
}

impl OneClassSvm {
    /// `gamma = None` uses `1 / n_features`.
    pub fn fit(
        reference: &Matrix,
        nu: f64,
        gamma: Option<f64>,
        max_reference: usize,
        seed: u64,
    ) -> Result<Self, DetectorError> {
        let original_rows = reference.nrows();
        let subsampled;
        let x = if original_rows > max_reference {
            let mut idx = SeededRng::new(seed).sample_indices(original_rows, max_reference);
            idx.sort_unstable();
            subsampled = reference.select_rows(&idx);
            &subsampled
        } else {
            reference
        };
        let gamma = gamma.unwrap_or(1.0 / x.ncols().max(1) as f64);
        let (alpha, rho, iterations) = solve(x, nu, gamma);
        let sv: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > 0.0).collect();
        let support = x.select_rows(&sv);
        let sq_norms = support.rows().map(|r| dot(r, r)).collect();
        Ok(Self {
            coef: sv.iter().map(|&i| alpha[i]).collect(),
            support,
            sq_norms,
            rho,
            gamma,
            iterations,
            fitted_rows: x.nrows(),
            original_rows,
        })
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let sq = dot(x, x);
        let mut s = 0.0;
        for (k, row) in self.support.rows().enumerate() {
            s += self.coef[k] * rbf(self.gamma, self.sq_norms[k], sq, dot(row, x));
        }
        s - self.rho
    }

    pub fn score(&self, targets: &Matrix) -> Vec<f64> {
        par::map_range(targets.nrows(), |i| -self.decision(targets.row(i)))
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn n_support(&self) -> usize {
        self.coef.len()
    }

    pub fn coef_sum(&self) -> f64 {
        self.coef.iter().sum()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn subsample_note(&self) -> Option<String> {
        (self.fitted_rows < self.original_rows).then(|| {
            format!("ocsvm: reference subsampled from {} to {} rows", self.original_rows, self.fitted_rows)
        })
    }
}

/// Returns `(alpha, rho, iterations)`.
fn solve(x: &Matrix, nu: f64, gamma: f64) -> (Vec<f64>, f64, usize) {
    let l = x.nrows();
    let mut kernel = Kernel::new(x, gamma);
    let total = nu * l as f64;
    let full = (total.floor() as usize).min(l);
    let mut alpha = vec![0.0; l];
    alpha[..full].iter_mut().for_each(|a| *a = 1.0);
    if full < l {
        alpha[full] = total - full as f64;
    }
    let active: Vec<usize> = (0..l).filter(|&i| alpha[i] > 0.0).collect();
    let mut grad = par::map_range(l, |t| active.iter().map(|&i| alpha[i] * kernel.eval(i, t)).sum::<f64>());

    let max_iter = 10_000_000usize.max(100 * l);
    let mut iter = 0;
    while iter < max_iter {
        // First index: maximal violating -G among those that can increase.
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..l {
            if alpha[t] < 1.0 && -grad[t] >= gmax {
                gmax = -grad[t];
                i = t;
            }
        }
        if i == usize::MAX {
            break;
        }
        let qi = kernel.row(i);
        // Second index: largest objective decrease among those that can decrease.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..l {
            if alpha[t] > 0.0 {
                let diff = gmax + grad[t];
                if grad[t] >= gmax2 {
                    gmax2 = grad[t];
                }
                if diff > 0.0 {
                    let quad = 2.0 - 2.0 * qi[t];
                    let quad = if quad > 0.0 { quad } else { TAU };
                    let obj = -(diff * diff) / quad;
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if gmax + gmax2 < EPS || j == usize::MAX {
            break;
        }
        iter += 1;
        let qj = kernel.row(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = {
            let q = 2.0 - 2.0 * qi[j];
            if q > 0.0 { q } else { TAU }
        };
        let delta = (grad[i] - grad[j]) / quad;
        let sum = old_i + old_j;
        let mut ai = old_i - delta;
        let mut aj = old_j + delta;
        if sum > 1.0 {
            if ai > 1.0 {
                ai = 1.0;
                aj = sum - 1.0;
            }
        } else if aj < 0.0 {
            aj = 0.0;
            ai = sum;
        }
        if sum > 1.0 {
            if aj > 1.0 {
                aj = 1.0;
                ai = sum - 1.0;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = sum;
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..l {
            grad[t] += qi[t] * di + qj[t] * dj;
        }
    }
    if iter >= max_iter {
        log::warn!("ocsvm: reached {max_iter} iterations without meeting the stopping tolerance");
    }

    // rho: mean gradient over free variables, else the midpoint of the bounds.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        if alpha[t] >= 1.0 {
            lb = lb.max(grad[t]);
        } else if alpha[t] <= 0.0 {
            ub = ub.min(grad[t]);
        } else {
            free += 1;
            sum_free += grad[t];
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };
    (alpha, rho, iter)
}
