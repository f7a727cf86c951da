use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_xy, Regressor, Standardizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrConfig {
    /// Loss weight against the `½‖w‖²` regularizer.
    pub c: f64,
    /// Tube half-width, in target units.
    pub epsilon: f64,
    pub epochs: usize,
    /// Initial step size; decays as `lr / sqrt(1 + epoch)`.
    pub lr: f64,
    pub seed: u64,
}

impl Default for SvrConfig {
    fn default() -> Self {
        SvrConfig {
            c: 100.0,
            epsilon: 0.0,
            epochs: 300,
            lr: 0.05,
            seed: 0,
        }
    }
}

/// Linear ε-insensitive regressor. Weights live on the standardized scale
/// of both features and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub scaler: Standardizer,
    pub y_mean: f64,
    pub y_scale: f64,
}

impl Regressor for SvrModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let z = self.scaler.transform_row(row);
        let s: f64 = z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias;
        self.y_mean + self.y_scale * s
    }
}

/// Subgradient of one sample's loss with respect to the prediction.
fn loss_slope(residual: f64, epsilon: f64) -> f64 {
    if residual > epsilon {
        -1.0
    } else if residual < -epsilon {
        1.0
    } else {
        0.0
    }
}

/// Stochastic subgradient descent on
/// `½‖w‖² + C · mean(max(0, |y − w·x − b| − ε))` with iterate averaging
/// over the second half of training.
pub fn svr_fit(x: ArrayView2<f64>, y: &[f64], config: &SvrConfig) -> Result<SvrModel> {
    check_xy(x, y)?;
    if !(config.c > 0.0) || !(config.epsilon >= 0.0) || !(config.lr > 0.0) {
        return Err(Error::invalid("SVR needs c > 0, epsilon >= 0 and lr > 0"));
    }
    let scaler = Standardizer::fit(x)?;
    let xs = scaler.transform(x)?;
    let n = y.len();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let var = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / n as f64;
    let y_scale = if var > 1e-24 { var.sqrt() } else { 1.0 };
    let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();
    let eps = config.epsilon / y_scale;
    let d = x.ncols();
    let lambda = 1.0 / (config.c * n as f64);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; d];
    let mut avg_b = 0.0;
    let mut averaged = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = config.lr / ((1 + epoch) as f64).sqrt();
        for &i in &order {
            let row = xs.row(i);
            let pred: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b;
            let g = loss_slope(ys[i] - pred, eps);
            for k in 0..d {
                w[k] -= lr * (lambda * w[k] + g * row[k]);
            }
            b -= lr * g;
        }
        if epoch >= config.epochs / 2 {
            averaged += 1;
            let t = averaged as f64;
            for k in 0..d {
                avg_w[k] += (w[k] - avg_w[k]) / t;
            }
            avg_b += (b - avg_b) / t;
        }
    }
    if averaged == 0 {
        avg_w = w;
        avg_b = b;
    }
    Ok(SvrModel {
        weights: avg_w,
        bias: avg_b,
        scaler,
        y_mean,
        y_scale,
    })
}
