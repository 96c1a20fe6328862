//! Stagewise additive tree models for squared loss.
//!
//! Both variants start from the training mean and add `learning_rate`-scaled
//! trees. Plain gradient boosting fits variance-criterion trees to the
//! residuals `y - F`. The regularized variant grows trees on the gradients
//! `g = F - y` (unit hessians) with the second-order gain, an L2 penalty
//! `lambda` on leaf weights and a minimum split gain `gamma`, and samples a
//! column subset per tree.

use ndarray::ArrayView2;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::cart::{Criterion, GrowConfig, MaxFeatures, Presorted, RegressionTree, SplitStyle};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Fraction of rows drawn without replacement for each stage.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_estimators: 100,
            learning_rate: 0.1,
            max_depth: 3,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegBoostParams {
    pub boost: BoostParams,
    /// Minimum gain a split must exceed.
    pub gamma: f64,
    pub colsample_bytree: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
}

impl Default for RegBoostParams {
    fn default() -> Self {
        RegBoostParams {
            boost: BoostParams {
                max_depth: 6,
                learning_rate: 0.3,
                ..BoostParams::default()
            },
            gamma: 0.0,
            colsample_bytree: 1.0,
            lambda: 1.0,
        }
    }
}

impl BoostParams {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::param(format!(
                "subsample must lie in (0, 1], got {}",
                self.subsample
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

/// 0/1 weights selecting `floor(fraction * n)` rows (at least one).
fn subsample_rows(n: usize, fraction: f64, rng: &mut Rng) -> Vec<f64> {
    if fraction >= 1.0 {
        return vec![1.0; n];
    }
    let k = ((fraction * n as f64).floor() as usize).clamp(1, n);
    let mut w = vec![0.0; n];
    for i in index::sample(rng, n, k) {
        w[i] = 1.0;
    }
    w
}

fn check_xy(x: ArrayView2<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    Ok(())
}

impl BoostedTrees {
    /// Gradient boosting with squared-error loss. Stage `m` subsamples rows
    /// from stream `(seed, m)`.
    pub fn fit_gradient(x: ArrayView2<f64>, y: &[f64], p: &BoostParams) -> Result<Self> {
        p.validate()?;
        check_xy(x, y)?;
        let cfg = GrowConfig {
            criterion: Criterion::Variance,
            max_depth: Some(p.max_depth),
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            split_style: SplitStyle::Best,
        };
        Ok(Self::boost(x, y, p, |data, f, m| {
            let mut rng = rng::child_rng(p.seed, m as u64);
            let weight = subsample_rows(y.len(), p.subsample, &mut rng);
            let residual: Vec<f64> = y.iter().zip(f).map(|(a, b)| a - b).collect();
            RegressionTree::fit_weighted(data, &residual, &weight, &cfg, None, rng)
        }))
    }

    /// Second-order regularized boosting. Stage `m` draws its row subsample,
    /// then its column subsample, from stream `(seed, m)`.
    pub fn fit_regularized(x: ArrayView2<f64>, y: &[f64], p: &RegBoostParams) -> Result<Self> {
        p.boost.validate()?;
        check_xy(x, y)?;
        if !(p.lambda >= 0.0) {
            return Err(Error::param(format!("lambda must be non-negative, got {}", p.lambda)));
        }
        if !(p.gamma >= 0.0) {
            return Err(Error::param(format!("gamma must be non-negative, got {}", p.gamma)));
        }
        if !(p.colsample_bytree > 0.0 && p.colsample_bytree <= 1.0) {
            return Err(Error::param(format!(
                "colsample_bytree must lie in (0, 1], got {}",
                p.colsample_bytree
            )));
        }
        let d = x.ncols();
        let k = ((p.colsample_bytree * d as f64).floor() as usize).clamp(1, d);
        let cfg = GrowConfig {
            criterion: Criterion::SecondOrder {
                lambda: p.lambda,
                gamma: p.gamma,
            },
            max_depth: Some(p.boost.max_depth),
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            split_style: SplitStyle::Best,
        };
        Ok(Self::boost(x, y, &p.boost, |data, f, m| {
            let mut rng = rng::child_rng(p.boost.seed, m as u64);
            let weight = subsample_rows(y.len(), p.boost.subsample, &mut rng);
            let mut cols = index::sample(&mut rng, d, k).into_vec();
            cols.sort_unstable();
            let grad: Vec<f64> = f.iter().zip(y).map(|(a, b)| a - b).collect();
            RegressionTree::fit_weighted(data, &grad, &weight, &cfg, Some(&cols), rng)
        }))
    }

    fn boost(
        x: ArrayView2<f64>,
        y: &[f64],
        p: &BoostParams,
        mut stage: impl FnMut(&Presorted, &[f64], usize) -> RegressionTree,
    ) -> Self {
        let base_score = y.iter().sum::<f64>() / y.len() as f64;
        let data = Presorted::new(x);
        let mut f = vec![base_score; y.len()];
        let mut trees = Vec::with_capacity(p.n_estimators);
        for m in 0..p.n_estimators {
            let tree = stage(&data, &f, m);
            for (fi, row) in f.iter_mut().zip(x.rows()) {
                *fi += p.learning_rate * tree.predict_with(|j| row[j]);
            }
            trees.push(tree);
        }
        BoostedTrees {
            base_score,
            learning_rate: p.learning_rate,
            trees,
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| {
                let mut f = self.base_score;
                for t in &self.trees {
                    f += self.learning_rate * t.predict_with(|j| r[j]);
                }
                f
            })
            .collect()
    }

    /// Predictions after 0, 1, ..., M stages.
    pub fn staged_predict(&self, x: ArrayView2<f64>) -> Vec<Vec<f64>> {
        let mut f = vec![self.base_score; x.nrows()];
        let mut out = vec![f.clone()];
        for t in &self.trees {
            for (fi, row) in f.iter_mut().zip(x.rows()) {
                *fi += self.learning_rate * t.predict_with(|j| row[j]);
            }
            out.push(f.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng as _;

    fn mse(y: &[f64], f: &[f64]) -> f64 {
        y.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64
    }

    fn data(seed: u64, n: usize) -> (Array2<f64>, Vec<f64>) {
        let mut r = rng::rng(seed);
        let x = Array2::from_shape_fn((n, 3), |_| r.random_range(-2.0f64..2.0));
        let y = x
            .rows()
            .into_iter()
            .map(|row| row[0] * row[1] + row[2].powi(2) + r.random_range(-0.3..0.3))
            .collect();
        (x, y)
    }

    #[test]
    fn zero_stages_predicts_mean() {
        let (x, y) = data(1, 20);
        let p = BoostParams {
            n_estimators: 0,
            ..BoostParams::default()
        };
        let m = BoostedTrees::fit_gradient(x.view(), &y, &p).unwrap();
        let mean = y.iter().sum::<f64>() / 20.0;
        assert!(m.predict(x.view()).iter().all(|&v| v == mean));
    }

    #[test]
    fn single_row_predicts_its_target() {
        let x = array![[1.0, 2.0, 3.0]];
        let m = BoostedTrees::fit_gradient(x.view(), &[4.25], &BoostParams::default()).unwrap();
        assert_eq!(m.predict(x.view()), vec![4.25]);
    }

    #[test]
    fn toy_stage_rmse_is_non_increasing() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [1.0, 3.0, 2.0, 8.0];
        let p = BoostParams {
            n_estimators: 50,
            learning_rate: 0.2,
            max_depth: 1,
            subsample: 1.0,
            seed: 0,
        };
        let m = BoostedTrees::fit_gradient(x.view(), &y, &p).unwrap();
        let curve: Vec<f64> = m.staged_predict(x.view()).iter().map(|f| mse(&y, f).sqrt()).collect();
        assert!(curve.windows(2).all(|w| w[1] <= w[0]));
        assert!(curve[50] < 0.5 * curve[0]);
    }

    #[test]
    fn rejects_bad_rates() {
        let (x, y) = data(2, 10);
        let p = BoostParams {
            learning_rate: 0.0,
            ..BoostParams::default()
        };
        assert!(BoostedTrees::fit_gradient(x.view(), &y, &p).is_err());
        let r = RegBoostParams {
            lambda: -1.0,
            ..RegBoostParams::default()
        };
        assert!(BoostedTrees::fit_regularized(x.view(), &y, &r).is_err());
        let r = RegBoostParams {
            gamma: -0.1,
            ..RegBoostParams::default()
        };
        assert!(BoostedTrees::fit_regularized(x.view(), &y, &r).is_err());
    }

    #[test]
    fn huge_gamma_blocks_every_split() {
        let (x, y) = data(3, 40);
        let p = RegBoostParams {
            gamma: 1e12,
            ..RegBoostParams::default()
        };
        let m = BoostedTrees::fit_regularized(x.view(), &y, &p).unwrap();
        let mean = y.iter().sum::<f64>() / 40.0;
        for v in m.predict(x.view()) {
            assert!((v - mean).abs() < 1e-9);
        }
    }

    #[test]
    fn balanced_leaf_weight_is_zero() {
        // g = (5 - 0) + (5 - 10) = 0 at F0 = 5, so the leaf weight -G/(H+λ) is 0
        let x = array![[1.0], [1.0]];
        let p = RegBoostParams {
            boost: BoostParams {
                n_estimators: 1,
                ..BoostParams::default()
            },
            ..RegBoostParams::default()
        };
        let m = BoostedTrees::fit_regularized(x.view(), &[0.0, 10.0], &p).unwrap();
        assert_eq!(m.base_score, 5.0);
        assert_eq!(m.trees[0].leaves().next().unwrap().0, 0.0);
    }

    #[test]
    fn unregularized_first_stage_matches_gradient_boosting() {
        for seed in 0..5 {
            let (x, y) = data(seed, 50);
            let gb = BoostedTrees::fit_gradient(
                x.view(),
                &y,
                &BoostParams {
                    n_estimators: 1,
                    learning_rate: 1.0,
                    max_depth: 4,
                    subsample: 1.0,
                    seed,
                },
            )
            .unwrap();
            let xgb = BoostedTrees::fit_regularized(
                x.view(),
                &y,
                &RegBoostParams {
                    boost: BoostParams {
                        n_estimators: 1,
                        learning_rate: 1.0,
                        max_depth: 4,
                        subsample: 1.0,
                        seed,
                    },
                    gamma: 0.0,
                    colsample_bytree: 1.0,
                    lambda: 0.0,
                },
            )
            .unwrap();
            for (a, b) in gb.predict(x.view()).iter().zip(xgb.predict(x.view())) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn accepted_splits_exceed_gamma() {
        let (x, y) = data(9, 120);
        let gamma = 0.4;
        let p = RegBoostParams {
            boost: BoostParams {
                n_estimators: 40,
                learning_rate: 0.3,
                max_depth: 4,
                subsample: 0.7,
                seed: 9,
            },
            gamma,
            colsample_bytree: 0.7,
            lambda: 1.0,
        };
        let m = BoostedTrees::fit_regularized(x.view(), &y, &p).unwrap();
        let mut n_splits = 0;
        for t in &m.trees {
            for (_, _, gain) in t.splits() {
                assert!(gain > gamma - 1e-12);
                n_splits += 1;
            }
        }
        assert!(n_splits > 0);
    }

    #[test]
    fn subsampled_fits_are_deterministic() {
        let (x, y) = data(4, 60);
        let p = RegBoostParams {
            boost: BoostParams {
                subsample: 0.7,
                seed: 21,
                ..BoostParams::default()
            },
            colsample_bytree: 0.7,
            ..RegBoostParams::default()
        };
        assert_eq!(
            BoostedTrees::fit_regularized(x.view(), &y, &p).unwrap(),
            BoostedTrees::fit_regularized(x.view(), &y, &p).unwrap()
        );
    }
}
