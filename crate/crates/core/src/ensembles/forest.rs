use ndarray::ArrayView2;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cart::{row_counts, GrowConfig, Presorted, RegressionTree, TreeParams};
use crate::error::{Error, Result};
use crate::rng;

/// Random forest / extra-trees settings. `tree.split_style` selects between
/// best splits and random thresholds; `tree.seed` is ignored in favour of
/// `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
    pub seed: u64,
}

/// Unweighted average of independently grown trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub trees: Vec<RegressionTree>,
}

impl TreeEnsemble {
    /// Tree `i` draws from stream `(seed, i)`: first its bootstrap sample (if
    /// enabled), then its per-node feature subsets and thresholds.
    pub fn fit(x: ArrayView2<f64>, y: &[f64], p: &ForestParams) -> Result<Self> {
        if p.n_estimators < 1 {
            return Err(Error::param("n_estimators must be at least 1"));
        }
        if x.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        p.tree.validate(x.ncols())?;
        let n = x.nrows();
        let data = Presorted::new(x);
        let cfg = GrowConfig::from_params(&p.tree);
        let trees = (0..p.n_estimators)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng::child_rng(p.seed, i as u64);
                let weight = if p.bootstrap {
                    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                    row_counts(n, &rows)
                } else {
                    vec![1.0; n]
                };
                RegressionTree::fit_weighted(&data, y, &weight, &cfg, None, rng)
            })
            .collect();
        Ok(TreeEnsemble { trees })
    }

    pub fn member_predictions(&self, row: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict_row(row)).collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| {
                let s: f64 = self.trees.iter().map(|t| t.predict_with(|f| r[f])).sum();
                s / self.trees.len() as f64
            })
            .collect()
    }
}
