//! Regression metrics: R², MAE and RMSE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            found: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Coefficient of determination, `1 - SS_res / SS_tot`.
///
/// A target with zero variance is reported as [`Error::DegenerateTarget`].
pub fn r2_score(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateTarget);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    let mse = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64;
    Ok(mse.sqrt())
}

/// The (R², MAE, RMSE) triple reported for each evaluation phase.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub r2: f64,
    pub mae: f64,
    pub rmse: f64,
}

impl Metrics {
    pub fn compute(y: &[f64], yhat: &[f64]) -> Result<Self> {
        Ok(Metrics {
            r2: r2_score(y, yhat)?,
            mae: mae(y, yhat)?,
            rmse: rmse(y, yhat)?,
        })
    }

    /// Element-wise arithmetic mean, summed in iteration order.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Metrics>) -> Metrics {
        let mut acc = Metrics::default();
        let mut n = 0usize;
        for m in items {
            acc.r2 += m.r2;
            acc.mae += m.mae;
            acc.rmse += m.rmse;
            n += 1;
        }
        if n == 0 {
            return Metrics {
                r2: f64::NAN,
                mae: f64::NAN,
                rmse: f64::NAN,
            };
        }
        let n = n as f64;
        Metrics {
            r2: acc.r2 / n,
            mae: acc.mae / n,
            rmse: acc.rmse / n,
        }
    }
}
