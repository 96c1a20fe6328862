use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::model::{Family, FittedModel, ModelSpec};
use crate::params::{ParamGrid, ParamSet};

/// Fold-averaged metrics on the fold-training rows and the held-out rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub train: Metrics,
    pub validation: Metrics,
}

/// Fits `spec` on the training rows of fold `fold`; any standardizer inside
/// the model sees only those rows.
pub fn fit_fold(spec: &ModelSpec, x: ArrayView2<f64>, y: &[f64], plan: &FoldPlan, fold: usize) -> Result<FittedModel> {
    let (train, _) = &plan.folds[fold];
    let xt = x.select(Axis(0), train);
    let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    spec.fit_xy(xt.view(), &yt)
}

fn eval_fold(spec: &ModelSpec, x: ArrayView2<f64>, y: &[f64], plan: &FoldPlan, fold: usize) -> Result<(Metrics, Metrics)> {
    let run = || -> Result<(Metrics, Metrics)> {
        let model = fit_fold(spec, x, y, plan, fold)?;
        let (train, val) = &plan.folds[fold];
        let phase = |rows: &[usize]| -> Result<Metrics> {
            let pred = model.predict(x.select(Axis(0), rows).view())?;
            let truth: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
            Metrics::compute(&truth, &pred)
        };
        Ok((phase(train)?, phase(val)?))
    };
    run().map_err(|e| Error::Fold {
        fold,
        source: Box::new(e),
    })
}

fn check_plan(x: ArrayView2<f64>, y: &[f64], plan: &FoldPlan) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    if plan.n != y.len() {
        return Err(Error::param(format!(
            "fold plan covers {} rows but the data has {}",
            plan.n,
            y.len()
        )));
    }
    Ok(())
}

fn summarize(per_fold: &[(Metrics, Metrics)]) -> CvResult {
    CvResult {
        train: Metrics::mean(per_fold.iter().map(|p| &p.0)),
        validation: Metrics::mean(per_fold.iter().map(|p| &p.1)),
    }
}

/// Fits on each fold's training rows and scores both phases.
pub fn cross_validate(spec: &ModelSpec, x: ArrayView2<f64>, y: &[f64], plan: &FoldPlan) -> Result<CvResult> {
    check_plan(x, y, plan)?;
    let per_fold = (0..plan.k())
        .into_par_iter()
        .map(|f| eval_fold(spec, x, y, plan, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&per_fold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub params: ParamSet,
    pub cv: CvResult,
}

/// Every evaluated candidate in enumeration order, and the winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub candidates: Vec<CandidateResult>,
    pub best: usize,
}

impl GridResult {
    pub fn best(&self) -> &CandidateResult {
        &self.candidates[self.best]
    }
}

/// Cross-validates every grid candidate with model seed `seed`. The winner
/// has the highest mean validation R², then the lowest validation RMSE, then
/// the earliest position.
pub fn grid_search(
    family: Family,
    grid: &ParamGrid,
    x: ArrayView2<f64>,
    y: &[f64],
    plan: &FoldPlan,
    seed: u64,
) -> Result<GridResult> {
    check_plan(x, y, plan)?;
    let specs = grid
        .candidates()?
        .into_iter()
        .map(|p| ModelSpec::new(family, p).map(|s| s.with_seed(seed)))
        .collect::<Result<Vec<_>>>()?;
    let k = plan.k();
    let jobs: Vec<(usize, usize)> = (0..specs.len()).flat_map(|c| (0..k).map(move |f| (c, f))).collect();
    let scores = jobs
        .par_iter()
        .map(|&(c, f)| eval_fold(&specs[c], x, y, plan, f))
        .collect::<Result<Vec<_>>>()?;
    let candidates: Vec<CandidateResult> = specs
        .into_iter()
        .zip(scores.chunks(k))
        .map(|(s, chunk)| CandidateResult {
            params: s.params,
            cv: summarize(chunk),
        })
        .collect();
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let (v, b) = (&c.cv.validation, &candidates[best].cv.validation);
        if v.r2 > b.r2 || (v.r2 == b.r2 && v.rmse < b.rmse) {
            best = i;
        }
    }
    Ok(GridResult { candidates, best })
}
