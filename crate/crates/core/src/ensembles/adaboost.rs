//! AdaBoost.R2 with depth-limited regression trees.
//!
//! Each round fits a tree to a weighted bootstrap resample of the training
//! rows, scores the per-row losses `L_i` on the full training set, and
//! reweights rows by `β^((1 − L_i)·lr)` with `β = L̄ / (1 − L̄)`. The ensemble
//! predicts the weighted median of the member predictions, weighting member
//! `m` by `lr·ln(1/β_m)`.

use ndarray::ArrayView2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::cart::{row_counts, GrowConfig, Presorted, RegressionTree, TreeParams};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaLoss {
    Linear,
    Square,
    Exponential,
}

impl AdaLoss {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "linear" => Ok(AdaLoss::Linear),
            "square" => Ok(AdaLoss::Square),
            "exponential" => Ok(AdaLoss::Exponential),
            other => Err(Error::param(format!(
                "loss must be linear, square or exponential, got {other:?}"
            ))),
        }
    }

    /// Loss of a residual scaled by the largest absolute residual.
    fn apply(self, scaled: f64) -> f64 {
        match self {
            AdaLoss::Linear => scaled,
            AdaLoss::Square => scaled * scaled,
            AdaLoss::Exponential => 1.0 - (-scaled).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub loss: AdaLoss,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for AdaParams {
    fn default() -> Self {
        AdaParams {
            n_estimators: 50,
            learning_rate: 1.0,
            loss: AdaLoss::Linear,
            max_depth: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub trees: Vec<RegressionTree>,
    pub weights: Vec<f64>,
}

/// Smallest value whose cumulative weight (in ascending value order) reaches
/// half of the total weight. Ties in value keep input order.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: values.len(),
            found: weights.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::DegenerateWeights(
            "weights must be non-negative with a positive sum".into(),
        ));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut acc = 0.0;
    for &i in &idx {
        acc += weights[i];
        if acc >= 0.5 * total {
            return Ok(values[i]);
        }
    }
    Ok(values[idx[idx.len() - 1]])
}

impl AdaBoostModel {
    pub fn fit(x: ArrayView2<f64>, y: &[f64], p: &AdaParams) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.nrows(),
                found: y.len(),
            });
        }
        if p.n_estimators == 0 {
            return Err(Error::param("n_estimators must be at least 1"));
        }
        if !(p.learning_rate > 0.0 && p.learning_rate.is_finite()) {
            return Err(Error::param(format!(
                "learning_rate must be positive, got {}",
                p.learning_rate
            )));
        }
        let n = y.len();
        let data = Presorted::new(x);
        let cfg = GrowConfig::from_params(&TreeParams {
            max_depth: Some(p.max_depth),
            ..TreeParams::default()
        });
        let mut sample_weight = vec![1.0 / n as f64; n];
        let mut trees = Vec::new();
        let mut weights = Vec::new();
        for m in 0..p.n_estimators {
            let mut rng = rng::child_rng(p.seed, m as u64);
            let dist = WeightedIndex::new(&sample_weight)
                .map_err(|e| Error::DegenerateWeights(e.to_string()))?;
            let rows: Vec<usize> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            let tree = RegressionTree::fit_weighted(
                &data,
                y,
                &row_counts(n, &rows),
                &cfg,
                None,
                rng,
            );
            let pred = tree.predict(x);
            let err: Vec<f64> = pred.iter().zip(y).map(|(a, b)| (a - b).abs()).collect();
            let max_err = err.iter().copied().fold(0.0, f64::max);
            let loss: Vec<f64> = if max_err > 0.0 {
                err.iter().map(|e| p.loss.apply(e / max_err)).collect()
            } else {
                vec![0.0; n]
            };
            let mean_loss: f64 = loss.iter().zip(&sample_weight).map(|(l, w)| l * w).sum();
            if mean_loss <= 0.0 {
                trees.push(tree);
                weights.push(1.0);
                break;
            }
            if mean_loss >= 0.5 {
                if trees.is_empty() {
                    trees.push(tree);
                    weights.push(1.0);
                }
                break;
            }
            let beta = mean_loss / (1.0 - mean_loss);
            weights.push(p.learning_rate * (1.0 / beta).ln());
            trees.push(tree);
            if m + 1 == p.n_estimators {
                break;
            }
            for (w, l) in sample_weight.iter_mut().zip(&loss) {
                *w *= beta.powf((1.0 - l) * p.learning_rate);
            }
            let total: f64 = sample_weight.iter().sum();
            if !(total > 0.0) {
                break;
            }
            for w in &mut sample_weight {
                *w /= total;
            }
        }
        Ok(AdaBoostModel { trees, weights })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        let mut member = vec![0.0; self.trees.len()];
        x.rows()
            .into_iter()
            .map(|r| {
                for (m, t) in member.iter_mut().zip(&self.trees) {
                    *m = t.predict_with(|j| r[j]);
                }
                weighted_median(&member, &self.weights)
            })
            .collect()
    }
}
