use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{check_xy, Regressor, Standardizer};
use crate::error::{Error, Result};

/// Lasso fit. Coefficients are reported on the original feature scale;
/// `standardized` keeps them on the internal unit-variance scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoModel {
    pub lambda: f64,
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub standardized: Vec<f64>,
    /// Objective `½‖r‖²/n + λ‖β‖₁` after each coordinate sweep.
    pub objective: Vec<f64>,
    pub converged: bool,
}

impl LassoModel {
    pub fn support(&self) -> Vec<usize> {
        (0..self.coef.len()).filter(|&k| self.coef[k] != 0.0).collect()
    }
}

impl Regressor for LassoModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.coef).map(|(x, b)| x * b).sum::<f64>()
    }
}

fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

struct Prepared {
    xs: Array2<f64>,
    yc: Array1<f64>,
    y_mean: f64,
    scaler: Standardizer,
    /// `(1/n) Σ x_k²` per standardized column (0 for constant columns).
    col_sq: Vec<f64>,
}

fn prepare(x: ArrayView2<f64>, y: &[f64]) -> Result<Prepared> {
    check_xy(x, y)?;
    let scaler = Standardizer::fit(x)?;
    let xs = scaler.transform(x)?;
    let n = y.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let yc = Array1::from_iter(y.iter().map(|v| v - y_mean));
    let col_sq = xs
        .axis_iter(Axis(1))
        .map(|c| c.dot(&c) / n)
        .collect();
    Ok(Prepared {
        xs,
        yc,
        y_mean,
        scaler,
        col_sq,
    })
}

/// Smallest penalty at which every coefficient is zero:
/// `max_k |x_kᵀ y| / n` on standardized, centred data.
pub fn lambda_max(x: ArrayView2<f64>, y: &[f64]) -> Result<f64> {
    let p = prepare(x, y)?;
    let n = y.len() as f64;
    Ok(p.xs
        .axis_iter(Axis(1))
        .map(|c| (c.dot(&p.yc) / n).abs())
        .fold(0.0, f64::max))
}

fn fit_prepared(
    p: &Prepared,
    lambda: f64,
    tol: f64,
    max_iter: usize,
    warm: Option<&[f64]>,
) -> LassoModel {
    let (n, d) = p.xs.dim();
    let nf = n as f64;
    let mut beta = warm.map_or_else(|| vec![0.0; d], <[f64]>::to_vec);
    let mut resid = p.yc.clone();
    for k in 0..d {
        if beta[k] != 0.0 {
            resid.scaled_add(-beta[k], &p.xs.column(k));
        }
    }
    let objective_of = |resid: &Array1<f64>, beta: &[f64]| {
        0.5 * resid.dot(resid) / nf + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
    };
    let mut objective = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let mut max_delta = 0.0f64;
        for k in 0..d {
            if p.col_sq[k] == 0.0 {
                continue;
            }
            let col = p.xs.column(k);
            let rho = col.dot(&resid) / nf + p.col_sq[k] * beta[k];
            let next = soft_threshold(rho, lambda) / p.col_sq[k];
            let delta = next - beta[k];
            if delta != 0.0 {
                resid.scaled_add(-delta, &col);
                beta[k] = next;
                max_delta = max_delta.max(delta.abs());
            }
        }
        objective.push(objective_of(&resid, &beta));
        if max_delta < tol {
            converged = true;
            break;
        }
    }
    let coef: Vec<f64> = beta
        .iter()
        .zip(&p.scaler.scale)
        .map(|(b, s)| b / s)
        .collect();
    let intercept = p.y_mean
        - coef
            .iter()
            .zip(&p.scaler.mean)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    LassoModel {
        lambda,
        coef,
        intercept,
        standardized: beta,
        objective,
        converged,
    }
}

/// Cyclic coordinate descent on `½‖y − Xβ‖²/n + λ‖β‖₁` over standardized
/// columns, stopping once no coefficient moves by `tol` or more in a sweep.
pub fn lasso_fit(
    x: ArrayView2<f64>,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LassoModel> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda {lambda} must be >= 0")));
    }
    let p = prepare(x, y)?;
    Ok(fit_prepared(&p, lambda, tol, max_iter, None))
}

/// Fits along a decreasing penalty grid with warm starts.
pub fn lasso_path(
    x: ArrayView2<f64>,
    y: &[f64],
    lambdas: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<LassoModel>> {
    let p = prepare(x, y)?;
    let mut out: Vec<LassoModel> = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        if !(l >= 0.0) {
            return Err(Error::invalid(format!("lambda {l} must be >= 0")));
        }
        let warm = out.last().map(|m| m.standardized.as_slice());
        out.push(fit_prepared(&p, l, tol, max_iter, warm));
    }
    Ok(out)
}

/// Residual sum of squares of the least-squares refit (with intercept) on
/// the columns in `support`.
fn refit_rss(x: ArrayView2<f64>, y: &[f64], support: &[usize]) -> Result<f64> {
    let sub = x.select(Axis(1), support);
    let m = lasso_fit(sub.view(), y, 0.0, 1e-10, 100_000)?;
    Ok(m.predict(sub.view())
        .iter()
        .zip(y)
        .map(|(p, t)| (p - t) * (p - t))
        .sum())
}

/// `ln C(p, k)`
fn ln_binomial(p: usize, k: usize) -> f64 {
    (0..k).map(|i| ((p - i) as f64 / (i + 1) as f64).ln()).sum()
}

/// Choose λ on a log grid from `lambda_max` down to `1e-3 · lambda_max` by
/// the extended BIC `n ln(RSS/n) + k ln n + 2 ln C(p, k)`, where `k` is the
/// support size and RSS comes from an unpenalized refit on that support.
/// The refit keeps shrinkage from favouring oversized supports; the
/// binomial term accounts for how many supports of size `k` exist. Supports
/// with `k ≥ n − 1` are skipped. Returns the lasso fit at the chosen λ.
pub fn select_lambda_ebic(x: ArrayView2<f64>, y: &[f64], grid: usize) -> Result<LassoModel> {
    if grid < 2 {
        return Err(Error::invalid("lambda grid needs at least 2 points"));
    }
    let top = lambda_max(x, y)?;
    if top == 0.0 {
        return lasso_fit(x, y, 0.0, 1e-8, 10_000);
    }
    let lambdas: Vec<f64> = (0..grid)
        .map(|k| top * 10f64.powf(-3.0 * k as f64 / (grid - 1) as f64))
        .collect();
    let path = lasso_path(x, y, &lambdas, 1e-8, 10_000)?;
    let n = y.len();
    let nf = n as f64;
    let mut scored: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut best = 0;
    let mut best_score = f64::INFINITY;
    for (k, m) in path.iter().enumerate() {
        let support = m.support();
        if support.len() + 1 >= n {
            continue;
        }
        let score = match scored.get(&support) {
            Some(s) => *s,
            None => {
                let rss = refit_rss(x, y, &support)?;
                let s = nf * (rss.max(1e-300) / nf).ln()
                    + support.len() as f64 * nf.ln()
                    + 2.0 * ln_binomial(x.ncols(), support.len());
                scored.insert(support, s);
                s
            }
        };
        if score < best_score - 1e-12 {
            best = k;
            best_score = score;
        }
    }
    Ok(path.into_iter().nth(best).expect("grid is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;

    #[test]
    fn zero_penalty_is_least_squares() {
        let x = arr2(&[[1.0, 2.0], [2.0, 1.0], [3.0, 5.0], [4.0, 3.0]]);
        let y = [1.0, 2.0, 0.5, 4.0];
        let m = lasso_fit(x.view(), &y, 0.0, 1e-12, 100_000).unwrap();
        let r: Vec<f64> = m.predict(x.view()).iter().zip(&y).map(|(p, t)| t - p).collect();
        // normal equations: residual orthogonal to the columns and the intercept
        for col in x.columns() {
            assert_abs_diff_eq!(col.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>(), 0.0, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(r.iter().sum::<f64>(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn orthogonal_design_soft_threshold() {
        // columns are orthogonal with zero mean and unit population variance
        let x = arr2(&[[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]]);
        let y: Vec<f64> = x.column(0).iter().map(|v| 2.0 * v).collect();
        let lambda = 0.01;
        let m = lasso_fit(x.view(), &y, lambda, 1e-12, 1000).unwrap();
        assert_abs_diff_eq!(m.coef[0], 2.0 - lambda, epsilon = 1e-12);
        assert_eq!(m.coef[1], 0.0);
    }

    #[test]
    fn lambda_max_kills_everything() {
        let x = arr2(&[[1.0, 0.3], [2.0, -1.0], [0.5, 2.0], [4.0, 1.0]]);
        let y = [1.0, 3.0, 0.0, 2.0];
        let top = lambda_max(x.view(), &y).unwrap();
        let m = lasso_fit(x.view(), &y, top, 1e-10, 1000).unwrap();
        assert!(m.coef.iter().all(|c| *c == 0.0));
        assert_abs_diff_eq!(m.intercept, 1.5, epsilon = 1e-12);
        let m = lasso_fit(x.view(), &y, top * 0.9, 1e-10, 1000).unwrap();
        assert!(m.coef.iter().any(|c| *c != 0.0));
    }

    #[test]
    fn objective_never_increases() {
        let x = arr2(&[[1.0, 2.0, 0.1], [2.0, 1.0, 0.4], [3.0, 5.0, -1.0], [4.0, 3.0, 0.0], [0.0, 1.0, 2.0]]);
        let y = [1.0, 2.0, 0.5, 4.0, -1.0];
        let m = lasso_fit(x.view(), &y, 0.05, 1e-12, 500).unwrap();
        assert!(m.objective.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let x = arr2(&[[f64::INFINITY]]);
        assert!(lasso_fit(x.view(), &[1.0], 0.1, 1e-6, 10).is_err());
        assert!(lasso_fit(arr2(&[[1.0]]).view(), &[1.0], -1.0, 1e-6, 10).is_err());
    }
}
