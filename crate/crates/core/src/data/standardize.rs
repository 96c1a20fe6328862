use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column z-score scaling with population standard deviation.
///
/// Constant columns have a recorded scale of 0 and transform to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let m = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
            mean.push(m);
            std.push(var.sqrt());
        }
        Ok(Standardizer { mean, std })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            col.mapv_inplace(|v| if s > 0.0 { (v - m) / s } else { 0.0 });
        }
        out
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..row.len() {
            let s = self.std[j];
            out[j] = if s > 0.0 { (row[j] - self.mean[j]) / s } else { 0.0 };
        }
    }

    /// Inverse of [`transform`](Self::transform); constant columns return
    /// their mean.
    pub fn inverse_transform(&self, z: ArrayView2<f64>) -> Array2<f64> {
        let mut out = z.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            col.mapv_inplace(|v| if s > 0.0 { v * s + m } else { m });
        }
        out
    }
}

/// Mean and scale of a target vector. A constant target gets scale 0: it
/// maps to 0 and every value maps back to the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub mean: f64,
    pub std: f64,
}

impl TargetScaler {
    pub fn fit(y: &[f64]) -> Self {
        let n = y.len().max(1) as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        TargetScaler { mean, std: var.sqrt() }
    }

    pub fn forward(&self, v: f64) -> f64 {
        if self.std > 0.0 {
            (v - self.mean) / self.std
        } else {
            0.0
        }
    }

    pub fn inverse(&self, v: f64) -> f64 {
        v * self.std + self.mean
    }
}
