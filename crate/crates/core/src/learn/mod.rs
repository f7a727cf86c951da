//! From-scratch learners and the training harness.

mod forest;
mod gcn;
mod harness;
mod importance;
mod lasso;
mod svm;
mod svr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use forest::{rf_fit, ForestConfig, RandomForest, RegressionTree};
pub use gcn::{
    evaluate as gcn_evaluate, forward_trace, gcn_forward, gcn_train, loss_and_gradients, sample_loss,
    GcnCheckpoint, GcnConfig, GcnGradients, GcnParams, GcnSample, GcnTrace, TrainedGcn,
};
pub use harness::{
    balanced, label_pair, pair_sample, pair_samples, sample_pairs, stratified_split,
    time_ordered_split, write_training_log, LogRow, NegativeSampling, PairCandidate, PairSample,
    SamplingConfig, Split, TimeSplit,
};
pub use importance::{
    lasso_group_importance, permutation_importance, GroupImportance, PERMUTATION_REPEATS,
};
pub use lasso::{lambda_max, lasso_fit, lasso_path, select_lambda_ebic, LassoModel};
pub use svm::{gamma_scale, svm_fit, SvmConfig, SvmModel};
pub use svr::{svr_fit, SvrConfig, SvrModel};

/// Column-wise zero mean, unit variance. Constant columns keep scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::EmptyInput("design matrix"));
        }
        check_finite(x)?;
        let mean: Array1<f64> = x.mean_axis(Axis(0)).expect("non-empty");
        let scale = x
            .axis_iter(Axis(1))
            .zip(mean.iter())
            .map(|(col, m)| {
                let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer {
            mean: mean.to_vec(),
            scale,
        })
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                context: "standardizer",
                detail: format!("{} columns, expected {}", x.ncols(), self.mean.len()),
            });
        }
        let mut out = x.to_owned();
        for (k, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| (v - self.mean[k]) / self.scale[k]);
        }
        Ok(out)
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(k, v)| (v - self.mean[k]) / self.scale[k])
            .collect()
    }
}

pub(crate) fn check_finite(x: ArrayView2<f64>) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("design matrix"))
    }
}

pub(crate) fn check_xy(x: ArrayView2<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    check_finite(x)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("targets"));
    }
    Ok(())
}

/// Build a matrix from equal-length rows.
pub fn rows_to_array(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let d = rows.first().map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(rows.len() * d);
    for r in rows {
        if r.len() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                actual: r.len(),
            });
        }
        flat.extend_from_slice(r);
    }
    Array2::from_shape_vec((rows.len(), d), flat)
        .map_err(|e| Error::invalid(format!("matrix shape: {e}")))
}

/// A fitted regressor over raw feature rows.
pub trait Regressor {
    fn predict_row(&self, row: &[f64]) -> f64;

    fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| self.predict_row(&r.to_vec()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn standardizer_round_trip() {
        let x = arr2(&[[1.0, 5.0], [3.0, 5.0]]);
        let s = Standardizer::fit(x.view()).unwrap();
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.scale, vec![1.0, 1.0]);
        assert_eq!(s.transform(x.view()).unwrap(), arr2(&[[-1.0, 0.0], [1.0, 0.0]]));
        assert!(Standardizer::fit(arr2(&[[f64::NAN]]).view()).is_err());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(rows_to_array(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert_eq!(rows_to_array(&[vec![1.0, 2.0]]).unwrap().dim(), (1, 2));
    }
}
