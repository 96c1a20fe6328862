//! Combinations of heterogeneous fitted models.
//!
//! Voting averages member predictions with fixed weights. Stacking fits an
//! ordinary least-squares meta-model on out-of-fold member predictions, then
//! refits the members on all rows. Member `i` always uses seed
//! `derive_seed(seed, i)`.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Family, FittedModel, ModelSpec};
use crate::rng;
use crate::selection::make_folds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeSpec {
    pub members: Vec<ModelSpec>,
    /// Voting weights; equal weights when absent.
    pub weights: Option<Vec<f64>>,
    /// Internal folds for stacking.
    pub folds: usize,
}

impl CompositeSpec {
    pub fn new(members: Vec<ModelSpec>) -> Self {
        CompositeSpec {
            members,
            weights: None,
            folds: 5,
        }
    }

    /// Random forest, extra trees and gradient boosting at their reference
    /// settings.
    pub fn voting_default() -> Self {
        Self::new(
            [Family::RandomForest, Family::ExtraTrees, Family::GradientBoosting]
                .into_iter()
                .map(ModelSpec::reference)
                .collect(),
        )
    }

    /// The voting members plus k-nearest neighbours.
    pub fn stacking_default() -> Self {
        let mut spec = Self::voting_default();
        spec.members.push(ModelSpec::reference(Family::KNeighbors));
        spec
    }

    fn seeded_members(&self, seed: u64) -> Result<Vec<ModelSpec>> {
        if self.members.is_empty() {
            return Err(Error::param("a composite model needs at least one member"));
        }
        Ok(self
            .members
            .iter()
            .enumerate()
            .map(|(i, m)| m.clone().with_seed(rng::derive_seed(seed, i as u64)))
            .collect())
    }
}

fn fit_members(specs: &[ModelSpec], x: ArrayView2<f64>, y: &[f64]) -> Result<Vec<FittedModel>> {
    specs.par_iter().map(|s| s.fit_xy(x, y)).collect()
}

/// Member predictions as columns.
fn member_matrix(members: &[FittedModel], x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((x.nrows(), members.len()));
    for (j, m) in members.iter().enumerate() {
        for (i, v) in m.predict(x)?.into_iter().enumerate() {
            out[[i, j]] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingModel {
    pub members: Vec<FittedModel>,
    pub weights: Vec<f64>,
}

impl VotingModel {
    pub fn fit(x: ArrayView2<f64>, y: &[f64], spec: &CompositeSpec, seed: u64) -> Result<Self> {
        let specs = spec.seeded_members(seed)?;
        let weights = match &spec.weights {
            None => vec![1.0; specs.len()],
            Some(w) => {
                if w.len() != specs.len() {
                    return Err(Error::LengthMismatch {
                        expected: specs.len(),
                        found: w.len(),
                    });
                }
                if w.iter().any(|v| !(*v >= 0.0)) || !(w.iter().sum::<f64>() > 0.0) {
                    return Err(Error::DegenerateWeights(
                        "voting weights must be non-negative with a positive sum".into(),
                    ));
                }
                w.clone()
            }
        };
        Ok(VotingModel {
            members: fit_members(&specs, x, y)?,
            weights,
        })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        let p = member_matrix(&self.members, x)?;
        let total: f64 = self.weights.iter().sum();
        Ok(p.rows()
            .into_iter()
            .map(|r| r.iter().zip(&self.weights).map(|(v, w)| v * w).sum::<f64>() / total)
            .collect())
    }
}

/// Least-squares fit `y ≈ intercept + features · coef` via the SVD of the
/// centred features; rank-deficient directions get zero weight, giving the
/// minimum-norm solution.
pub fn least_squares_with_intercept(features: &Array2<f64>, y: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (n, m) = features.dim();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let means = features.mean_axis(Axis(0)).unwrap();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let a = DMatrix::from_fn(n, m, |i, j| features[[i, j]] - means[j]);
    let b = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let svd = a.svd(true, true);
    let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = (s_max * 1e-10).max(f64::MIN_POSITIVE);
    let coef = svd.solve(&b, eps).map_err(|e| Error::DegenerateWeights(e.to_string()))?;
    let coef: Vec<f64> = coef.iter().copied().collect();
    let intercept = y_mean - coef.iter().zip(means.iter()).map(|(c, mu)| c * mu).sum::<f64>();
    Ok((intercept, coef))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingModel {
    pub members: Vec<FittedModel>,
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl StackingModel {
    /// Out-of-fold predictions come from `min(folds, n)` folds drawn with
    /// `seed`.
    pub fn fit(x: ArrayView2<f64>, y: &[f64], spec: &CompositeSpec, seed: u64) -> Result<Self> {
        let specs = spec.seeded_members(seed)?;
        let n = x.nrows();
        if n < 2 {
            return Err(Error::param("stacking needs at least two rows"));
        }
        let plan = make_folds(n, spec.folds.max(2).min(n), seed)?;
        let fold_models: Vec<(Vec<usize>, Vec<FittedModel>)> = plan
            .folds
            .par_iter()
            .map(|(train, val)| {
                let xt = x.select(Axis(0), train);
                let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                Ok((val.clone(), fit_members(&specs, xt.view(), &yt)?))
            })
            .collect::<Result<_>>()?;
        let mut oof = Array2::zeros((n, specs.len()));
        for (val, members) in &fold_models {
            let p = member_matrix(members, x.select(Axis(0), val).view())?;
            for (r, &i) in val.iter().enumerate() {
                oof.row_mut(i).assign(&p.row(r));
            }
        }
        let (intercept, coef) = least_squares_with_intercept(&oof, y)?;
        Ok(StackingModel {
            members: fit_members(&specs, x, y)?,
            intercept,
            coef,
        })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        let p = member_matrix(&self.members, x)?;
        Ok(p.rows()
            .into_iter()
            .map(|r| self.intercept + r.iter().zip(&self.coef).map(|(v, c)| v * c).sum::<f64>())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamSet;
    use ndarray::{array, Array2};

    fn knn1() -> ModelSpec {
        ModelSpec::new(Family::KNeighbors, ParamSet::new().with("n_neighbors", 1i64)).unwrap()
    }

    #[test]
    fn voting_with_one_member_is_that_member() {
        let x = array![[0.0], [1.0], [2.0], [5.0]];
        let y = [1.0, 3.0, 2.0, 9.0];
        let v = VotingModel::fit(x.view(), &y, &CompositeSpec::new(vec![knn1()]), 0).unwrap();
        let direct = knn1().fit_xy(x.view(), &y).unwrap();
        let q = array![[0.2], [3.9]];
        assert_eq!(v.predict(q.view()).unwrap(), direct.predict(q.view()).unwrap());
    }

    #[test]
    fn voting_weights() {
        // members fitted on constant targets 4 and 8 predict those constants
        let x = array![[0.0], [1.0]];
        let four = knn1().fit_xy(x.view(), &[4.0, 4.0]).unwrap();
        let eight = knn1().fit_xy(x.view(), &[8.0, 8.0]).unwrap();
        let mut v = VotingModel {
            members: vec![four, eight],
            weights: vec![1.0, 1.0],
        };
        assert_eq!(v.predict(x.view()).unwrap(), vec![6.0, 6.0]);
        v.weights = vec![1.0, 3.0];
        assert_eq!(v.predict(x.view()).unwrap(), vec![7.0, 7.0]);
    }

    #[test]
    fn zero_members_is_an_error() {
        let x = array![[0.0], [1.0]];
        let spec = CompositeSpec::new(vec![]);
        assert!(VotingModel::fit(x.view(), &[0.0, 1.0], &spec, 0).is_err());
        assert!(StackingModel::fit(x.view(), &[0.0, 1.0], &spec, 0).is_err());
    }

    #[test]
    fn least_squares_recovers_exact_plane() {
        let f = array![[0.0, 1.0], [1.0, 0.0], [2.0, 3.0], [4.0, 1.0]];
        let y: Vec<f64> = f.rows().into_iter().map(|r| 1.5 + 2.0 * r[0] - r[1]).collect();
        let (b, c) = least_squares_with_intercept(&f, &y).unwrap();
        assert!((b - 1.5).abs() < 1e-10);
        assert!((c[0] - 2.0).abs() < 1e-10 && (c[1] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_member_columns_leave_the_mean_as_intercept() {
        let f = array![[3.0, -1.0], [3.0, -1.0], [3.0, -1.0]];
        let (b, c) = least_squares_with_intercept(&f, &[1.0, 2.0, 6.0]).unwrap();
        assert_eq!(c, vec![0.0, 0.0]);
        assert!((b - 3.0).abs() < 1e-12); // mean of y
    }

    #[test]
    fn perfect_member_gives_identity_meta_model() {
        // two well separated plateaus: every fold's tree splits between them
        let xs: Vec<f64> = (0..20).map(|i| if i < 10 { i as f64 * 0.4 } else { 6.0 + i as f64 * 0.4 }).collect();
        let x = Array2::from_shape_vec((20, 1), xs).unwrap();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 2.0 } else { 12.0 }).collect();
        let tree = ModelSpec::new(Family::DecisionTree, ParamSet::new().with("max_depth", 1i64)).unwrap();
        let s = StackingModel::fit(x.view(), &y, &CompositeSpec::new(vec![tree]), 7).unwrap();
        assert!(s.intercept.abs() < 1e-6, "{}", s.intercept);
        assert!((s.coef[0] - 1.0).abs() < 1e-6, "{:?}", s.coef);
        let q = array![[1.0], [11.0]];
        let member = s.members[0].predict(q.view()).unwrap();
        for (a, b) in s.predict(q.view()).unwrap().iter().zip(member) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
