use ndarray::ArrayView2;
use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cart::{row_counts, GrowConfig, Presorted, RegressionTree, TreeParams};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaggingParams {
    pub n_estimators: usize,
    /// Bootstrap size as a fraction of the training rows.
    pub max_samples: f64,
    /// Size of each estimator's feature subset as a fraction of the columns.
    pub max_features: f64,
    pub seed: u64,
}

impl BaggingParams {
    fn validate(&self) -> Result<()> {
        if self.n_estimators < 1 {
            return Err(Error::param("n_estimators must be at least 1"));
        }
        for (name, v) in [("max_samples", self.max_samples), ("max_features", self.max_features)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::param(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// One bagged estimator: an unrestricted tree and the columns it may use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedTree {
    pub features: Vec<usize>,
    pub tree: RegressionTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggingModel {
    pub estimators: Vec<BaggedTree>,
}

impl BaggingModel {
    /// Estimator `i` draws `floor(max_samples * n)` rows with replacement and
    /// `floor(max_features * d)` distinct columns (at least one of each) from
    /// stream `(seed, i)`.
    pub fn fit(x: ArrayView2<f64>, y: &[f64], p: &BaggingParams) -> Result<Self> {
        p.validate()?;
        let (n, d) = x.dim();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let n_draw = ((p.max_samples * n as f64).floor() as usize).max(1);
        let k = ((p.max_features * d as f64).floor() as usize).max(1);
        let data = Presorted::new(x);
        let cfg = GrowConfig::from_params(&TreeParams::default());
        let estimators = (0..p.n_estimators)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng::child_rng(p.seed, i as u64);
                let rows: Vec<usize> = (0..n_draw).map(|_| rng.random_range(0..n)).collect();
                let mut features = index::sample(&mut rng, d, k).into_vec();
                features.sort_unstable();
                let weight = row_counts(n, &rows);
                let tree = RegressionTree::fit_weighted(&data, y, &weight, &cfg, Some(&features), rng);
                BaggedTree { features, tree }
            })
            .collect();
        Ok(BaggingModel { estimators })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let m = self.estimators.len() as f64;
        x.rows()
            .into_iter()
            .map(|r| self.estimators.iter().map(|e| e.tree.predict_with(|f| r[f])).sum::<f64>() / m)
            .collect()
    }
}
