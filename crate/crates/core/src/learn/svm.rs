use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::check_finite;
use crate::error::{Error, Result};
use crate::features::FeatureMask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    /// Kernel bandwidth; `None` uses [`gamma_scale`].
    pub gamma: Option<f64>,
    /// Stop once the maximal KKT violation falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

/// `1 / (d · Var(X))` over all entries, 1 for constant data.
pub fn gamma_scale(x: ArrayView2<f64>) -> f64 {
    let n = x.len() as f64;
    if n == 0.0 {
        return 1.0;
    }
    let mean = x.sum() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 1e-24 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Gaussian-kernel SVM classifier trained in the dual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub mask: FeatureMask,
    /// Training label in the majority, used for all-zero text inputs.
    pub majority: i8,
    /// Full dual solution over the training set.
    pub alpha: Vec<f64>,
    pub c: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SvmModel {
    fn degenerate(&self, x: &[f64]) -> bool {
        self.mask == FeatureMask::Text && x.iter().all(|v| *v == 0.0)
    }

    /// Signed decision value; 0 for a degenerate text input.
    pub fn decision(&self, x: &[f64]) -> f64 {
        if self.degenerate(x) {
            return 0.0;
        }
        self.support
            .iter()
            .zip(&self.dual_coef)
            .map(|(s, c)| c * rbf(s, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> i8 {
        if self.degenerate(x) {
            return self.majority;
        }
        if self.decision(x) >= 0.0 {
            1
        } else {
            -1
        }
    }

    /// Decision value squashed into `(0, 1)` for ranking metrics.
    pub fn score(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.decision(x)).exp())
    }
}

/// Sequential minimal optimization with second-order working-set
/// selection over `min ½ αᵀQα − Σα` s.t. `0 ≤ α ≤ C`, `Σ α_i y_i = 0`.
pub fn svm_fit(
    x: ArrayView2<f64>,
    y: &[i8],
    config: &SvmConfig,
    mask: FeatureMask,
) -> Result<SvmModel> {
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyInput("training set"));
    }
    check_finite(x)?;
    if y.iter().any(|l| *l != 1 && *l != -1) {
        return Err(Error::invalid("SVM labels must be -1 or +1"));
    }
    let pos = y.iter().filter(|l| **l == 1).count();
    if pos == 0 || pos == n {
        return Err(Error::SingleClass);
    }
    if !(config.c > 0.0) || !(config.tol > 0.0) {
        return Err(Error::invalid("SVM needs c > 0 and tol > 0"));
    }
    let gamma = config.gamma.unwrap_or_else(|| gamma_scale(x));
    let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
    let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let k = Array2::from_shape_fn((n, n), |(i, j)| rbf(&rows[i], &rows[j], gamma));
    let q = |i: usize, j: usize| yf[i] * yf[j] * k[[i, j]];
    let c = config.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        // i: maximal violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(alpha[t], yf[t]) && -yf[t] * grad[t] >= gmax {
                gmax = -yf[t] * grad[t];
                i = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], yf[t]) {
                continue;
            }
            let v = -yf[t] * grad[t];
            gmin = gmin.min(v);
            if i != usize::MAX && v < gmax {
                let b = gmax - v;
                let a = (k[[i, i]] + k[[t, t]] - 2.0 * k[[i, t]]).max(1e-12);
                let obj = -(b * b) / a;
                if obj <= best {
                    best = obj;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < config.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let a = (k[[i, i]] + k[[j, j]] - 2.0 * k[[i, j]]).max(1e-12);
        if yf[i] != yf[j] {
            let delta = (-grad[i] - grad[j]) / a;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / a;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }
    // offset from free vectors, else the midpoint of the feasible range
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = yf[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += yg;
            free_n += 1;
        } else if (alpha[t] >= c && yf[t] < 0.0) || (alpha[t] <= 0.0 && yf[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free_n > 0 {
        free_sum / free_n as f64
    } else {
        (ub + lb) / 2.0
    };
    let mut support = Vec::new();
    let mut dual_coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support.push(rows[t].clone());
            dual_coef.push(alpha[t] * yf[t]);
        }
    }
    Ok(SvmModel {
        support,
        dual_coef,
        bias: -rho,
        gamma,
        mask,
        majority: if 2 * pos >= n { 1 } else { -1 },
        alpha,
        c,
        iterations,
        converged,
    })
}
