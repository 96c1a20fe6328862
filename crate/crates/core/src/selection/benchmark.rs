use serde::{Deserialize, Serialize};

use super::cv::grid_search;
use super::folds::make_folds;
use crate::data::{split, SplitSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::model::{Family, ModelSpec};
use crate::params::{ParamGrid, ParamSet};

/// What to run: families with their grids, the seed sequence, the split and
/// the fold count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPlan {
    pub families: Vec<(Family, ParamGrid)>,
    pub seeds: Vec<u64>,
    pub split: SplitSpec,
    pub cv_folds: usize,
}

impl BenchmarkPlan {
    /// Default grids, seeds 0..5, an 80/20 split and 5 folds.
    pub fn new(families: &[Family]) -> Self {
        BenchmarkPlan {
            families: families.iter().map(|&f| (f, f.default_grid())).collect(),
            seeds: (0..5).collect(),
            split: SplitSpec::default(),
            cv_folds: 5,
        }
    }

    /// The split used for repetition `seed`: redrawn per seed unless
    /// `split.fixed_split` is set.
    pub fn split_for(&self, seed: u64) -> SplitSpec {
        if self.split.fixed_split {
            self.split
        } else {
            self.split.with_seed(seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub params: ParamSet,
    pub train: Metrics,
    pub validation: Metrics,
    pub test: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub family: Family,
    /// The most frequent per-seed winner (earliest seed on ties).
    pub best_params: ParamSet,
    pub train: Metrics,
    pub validation: Metrics,
    pub test: Metrics,
    pub per_seed: Vec<SeedResult>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seeds: Vec<u64>,
    /// Sorted by mean test R², best first; failed rows last.
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn row(&self, family: Family) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.family == family)
    }
}

fn modal_params(per_seed: &[SeedResult]) -> ParamSet {
    let mut best: Option<(&ParamSet, usize)> = None;
    for r in per_seed {
        let count = per_seed.iter().filter(|o| o.params == r.params).count();
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((&r.params, count));
        }
    }
    best.map(|(p, _)| p.clone()).unwrap_or_default()
}

fn error_chain(e: &Error) -> String {
    let mut msg = e.to_string();
    let mut cur = std::error::Error::source(e);
    while let Some(inner) = cur {
        msg.push_str(&format!(": {inner}"));
        cur = inner.source();
    }
    msg
}

fn run_seed(ds: &Dataset, family: Family, grid: &ParamGrid, plan: &BenchmarkPlan, seed: u64) -> Result<SeedResult> {
    let (train, test) = split(ds, &plan.split_for(seed))?;
    let x = train.features();
    let y = train.targets()?;
    let folds = make_folds(train.len(), plan.cv_folds, seed)?;
    let grid_res = grid_search(family, grid, x.view(), &y, &folds, seed)?;
    let best = grid_res.best();
    let model = ModelSpec::new(family, best.params.clone())?.with_seed(seed).fit(&train)?;
    let pred = model.predict_dataset(&test)?;
    Ok(SeedResult {
        seed,
        params: best.params.clone(),
        train: best.cv.train,
        validation: best.cv.validation,
        test: Metrics::compute(&test.targets()?, &pred)?,
    })
}

/// For each family and seed: split, grid-search with k-fold CV on the
/// training part, refit the winner on the whole training part and score it
/// on the test part. Training and validation columns are the winner's
/// fold-averaged CV metrics; every column is averaged over seeds.
pub fn run_benchmark(ds: &Dataset, plan: &BenchmarkPlan) -> Result<EvalReport> {
    if !ds.has_target() {
        return Err(Error::MissingTarget);
    }
    if plan.seeds.is_empty() {
        return Err(Error::param("at least one seed is required"));
    }
    let mut rows = Vec::new();
    for (family, grid) in &plan.families {
        let mut per_seed = Vec::new();
        let mut failure = None;
        for &seed in &plan.seeds {
            match run_seed(ds, *family, grid, plan, seed) {
                Ok(r) => per_seed.push(r),
                Err(e) => {
                    failure = Some(format!("seed {seed}: {}", error_chain(&e)));
                    break;
                }
            }
        }
        let nan = Metrics {
            r2: f64::NAN,
            mae: f64::NAN,
            rmse: f64::NAN,
        };
        let row = if failure.is_some() {
            ReportRow {
                family: *family,
                best_params: ParamSet::new(),
                train: nan,
                validation: nan,
                test: nan,
                per_seed,
                failure,
            }
        } else {
            ReportRow {
                family: *family,
                best_params: modal_params(&per_seed),
                train: Metrics::mean(per_seed.iter().map(|r| &r.train)),
                validation: Metrics::mean(per_seed.iter().map(|r| &r.validation)),
                test: Metrics::mean(per_seed.iter().map(|r| &r.test)),
                per_seed,
                failure: None,
            }
        };
        rows.push(row);
    }
    // stable sort keeps plan order among equal scores
    rows.sort_by(|a, b| match (a.failure.is_some(), b.failure.is_some()) {
        (false, false) => b.test.r2.total_cmp(&a.test.r2),
        (fa, fb) => fa.cmp(&fb),
    });
    Ok(EvalReport {
        seeds: plan.seeds.clone(),
        rows,
    })
}
