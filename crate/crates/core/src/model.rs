//! The twelve model families behind one fit/predict contract, and the
//! on-disk model format.
//!
//! A [`ModelSpec`] names a family, its hyperparameters and a seed; fitting
//! it yields a [`FittedModel`] that carries its input schema and, for the
//! scale-sensitive families (SVR, k-NN, MLP), the feature standardizer fitted
//! on its own training rows.
//!
//! Saved models are JSON documents of the form
//! `{"format": "cbrml-model", "version": 1, "model": {...}}`, where `model`
//! holds the family, parameters, seed, schema, standardizer and the fitted
//! body. Floats are written in shortest round-trip form, so a reloaded model
//! predicts bit-identically.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{ArrayView2, Array2};
use serde::{Deserialize, Serialize};

use crate::cart::{MaxFeatures, RegressionTree, SplitStyle, TreeParams};
use crate::data::Standardizer;
use crate::dataset::{Dataset, FEATURE_NAMES, N_FEATURES};
use crate::ensembles::{
    AdaBoostModel, AdaLoss, AdaParams, BaggingModel, BaggingParams, BoostParams, BoostedTrees,
    CompositeSpec, ForestParams, RegBoostParams, StackingModel, TreeEnsemble, VotingModel,
};
use crate::error::{Error, Result};
use crate::kernel::{KnnModel, KnnParams, Metric, SvrModel, SvrParams, Weighting};
use crate::neural::{Activation, MlpModel, MlpParams};
use crate::params::{ParamGrid, ParamSet, ParamValue};
use crate::values;

pub const FORMAT_NAME: &str = "cbrml-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "random_forest")]
    RandomForest,
    #[serde(rename = "bagging")]
    Bagging,
    #[serde(rename = "extra_trees")]
    ExtraTrees,
    #[serde(rename = "voting")]
    Voting,
    #[serde(rename = "xgboost")]
    XGBoost,
    #[serde(rename = "svr")]
    Svr,
    #[serde(rename = "adaboost")]
    AdaBoost,
    #[serde(rename = "knn")]
    KNeighbors,
    #[serde(rename = "mlp")]
    Mlp,
    #[serde(rename = "gradient_boosting")]
    GradientBoosting,
    #[serde(rename = "decision_tree")]
    DecisionTree,
    #[serde(rename = "stacking")]
    Stacking,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::RandomForest,
        Family::Bagging,
        Family::ExtraTrees,
        Family::Voting,
        Family::XGBoost,
        Family::Svr,
        Family::AdaBoost,
        Family::KNeighbors,
        Family::Mlp,
        Family::GradientBoosting,
        Family::DecisionTree,
        Family::Stacking,
    ];

    /// Display name used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Family::RandomForest => "RandomForest",
            Family::Bagging => "Bagging",
            Family::ExtraTrees => "ExtraTrees",
            Family::Voting => "Voting",
            Family::XGBoost => "XGBoost",
            Family::Svr => "SVR",
            Family::AdaBoost => "AdaBoost",
            Family::KNeighbors => "KNeighbors",
            Family::Mlp => "MLPRegressor",
            Family::GradientBoosting => "GradientBoosting",
            Family::DecisionTree => "DecisionTree",
            Family::Stacking => "Stacking",
        }
    }

    /// Short name used on the command line and in file names.
    pub fn key(self) -> &'static str {
        match self {
            Family::RandomForest => "random_forest",
            Family::Bagging => "bagging",
            Family::ExtraTrees => "extra_trees",
            Family::Voting => "voting",
            Family::XGBoost => "xgboost",
            Family::Svr => "svr",
            Family::AdaBoost => "adaboost",
            Family::KNeighbors => "knn",
            Family::Mlp => "mlp",
            Family::GradientBoosting => "gradient_boosting",
            Family::DecisionTree => "decision_tree",
            Family::Stacking => "stacking",
        }
    }

    /// Accepts a key or a label, ignoring case.
    pub fn from_key(name: &str) -> Result<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.key().eq_ignore_ascii_case(name) || f.label().eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                let keys: Vec<&str> = Family::ALL.iter().map(|f| f.key()).collect();
                Error::param(format!(
                    "unknown model family {name:?}; valid names: {}",
                    keys.join(", ")
                ))
            })
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::DecisionTree => &["max_depth", "max_features", "min_samples_leaf", "min_samples_split"],
            Family::RandomForest | Family::ExtraTrees => &[
                "max_depth",
                "max_features",
                "min_samples_leaf",
                "min_samples_split",
                "n_estimators",
            ],
            Family::Bagging => &["max_features", "max_samples", "n_estimators"],
            Family::GradientBoosting => &["learning_rate", "max_depth", "n_estimators", "subsample"],
            Family::XGBoost => &[
                "colsample_bytree",
                "gamma",
                "learning_rate",
                "max_depth",
                "n_estimators",
                "reg_lambda",
                "subsample",
            ],
            Family::AdaBoost => &["learning_rate", "loss", "max_depth", "n_estimators"],
            Family::Svr => &["C", "epsilon", "gamma", "kernel", "tol"],
            Family::KNeighbors => &["metric", "n_neighbors", "weights"],
            Family::Mlp => &[
                "activation",
                "alpha",
                "batch_size",
                "hidden_layer_sizes",
                "learning_rate",
                "learning_rate_init",
                "max_iter",
                "solver",
            ],
            Family::Voting => &["members"],
            Family::Stacking => &["cv", "members"],
        }
    }

    /// Whether features are z-scored before reaching the model.
    pub fn scales_features(self) -> bool {
        matches!(self, Family::Svr | Family::KNeighbors | Family::Mlp)
    }

    /// Reference tuned configuration for each family; these values are the
    /// anchors of [`Family::default_grid`].
    pub fn reference_params(self) -> ParamSet {
        let p = ParamSet::new();
        match self {
            Family::RandomForest => p
                .with("max_depth", 10i64)
                .with("max_features", "sqrt")
                .with("min_samples_leaf", 1i64)
                .with("min_samples_split", 5i64)
                .with("n_estimators", 100i64),
            Family::Bagging => p
                .with("max_features", 0.7)
                .with("max_samples", 0.9)
                .with("n_estimators", 200i64),
            Family::ExtraTrees => p
                .with("max_depth", 10i64)
                .with("min_samples_split", 2i64)
                .with("n_estimators", 300i64),
            Family::XGBoost => p
                .with("colsample_bytree", 0.7)
                .with("gamma", 0.1)
                .with("learning_rate", 0.01)
                .with("max_depth", 3i64)
                .with("n_estimators", 300i64)
                .with("subsample", 0.7),
            Family::Svr => p.with("C", 1000i64).with("epsilon", 0.5).with("kernel", "rbf"),
            Family::AdaBoost => p
                .with("learning_rate", 0.01)
                .with("loss", "exponential")
                .with("n_estimators", 200i64),
            Family::KNeighbors => p
                .with("metric", "manhattan")
                .with("n_neighbors", 3i64)
                .with("weights", "distance"),
            Family::Mlp => p
                .with("activation", "relu")
                .with("alpha", 0.001)
                .with("hidden_layer_sizes", ParamValue::Layers(vec![100]))
                .with("learning_rate", "constant")
                .with("solver", "adam"),
            Family::GradientBoosting => p
                .with("learning_rate", 0.2)
                .with("max_depth", 5i64)
                .with("n_estimators", 300i64)
                .with("subsample", 0.7),
            Family::DecisionTree => p
                .with("max_depth", 5i64)
                .with("min_samples_leaf", 2i64)
                .with("min_samples_split", 10i64),
            Family::Voting | Family::Stacking => p,
        }
    }

    pub fn default_grid(self) -> ParamGrid {
        let g = ParamGrid::new();
        match self {
            Family::RandomForest => g
                .with("max_depth", values![5i64, 10i64, "none"])
                .with("max_features", values!["sqrt", "all"])
                .with("min_samples_leaf", values![1i64, 2i64])
                .with("min_samples_split", values![2i64, 5i64, 10i64])
                .with("n_estimators", values![100i64, 300i64]),
            Family::ExtraTrees => g
                .with("max_depth", values![5i64, 10i64, "none"])
                .with("min_samples_split", values![2i64, 5i64, 10i64])
                .with("n_estimators", values![100i64, 300i64]),
            Family::Bagging => g
                .with("max_features", values![0.5, 0.7, 1.0])
                .with("max_samples", values![0.7, 0.9, 1.0])
                .with("n_estimators", values![100i64, 200i64]),
            Family::GradientBoosting => g
                .with("learning_rate", values![0.05, 0.1, 0.2])
                .with("max_depth", values![3i64, 5i64])
                .with("n_estimators", values![100i64, 300i64])
                .with("subsample", values![0.7, 1.0]),
            Family::XGBoost => g
                .with("colsample_bytree", values![0.7, 1.0])
                .with("gamma", values![0.0, 0.1])
                .with("learning_rate", values![0.01, 0.1])
                .with("max_depth", values![3i64, 5i64])
                .with("n_estimators", values![300i64])
                .with("subsample", values![0.7, 1.0]),
            Family::Svr => g
                .with("C", values![10i64, 100i64, 1000i64])
                .with("epsilon", values![0.1, 0.5])
                .with("kernel", values!["rbf"]),
            Family::AdaBoost => g
                .with("learning_rate", values![0.01, 0.1, 1.0])
                .with("loss", values!["linear", "square", "exponential"])
                .with("n_estimators", values![50i64, 200i64]),
            Family::KNeighbors => g
                .with("metric", values!["manhattan", "euclidean"])
                .with("n_neighbors", values![3i64, 5i64, 7i64])
                .with("weights", values!["uniform", "distance"]),
            Family::Mlp => g
                .with("activation", values!["relu", "tanh"])
                .with("alpha", values![0.0001, 0.001])
                .with("hidden_layer_sizes", vec![ParamValue::Layers(vec![100])])
                .with("learning_rate", values!["constant"])
                .with("solver", values!["adam"]),
            Family::DecisionTree => g
                .with("max_depth", values![3i64, 5i64, 10i64, "none"])
                .with("min_samples_leaf", values![1i64, 2i64, 4i64])
                .with("min_samples_split", values![2i64, 5i64, 10i64]),
            Family::Voting | Family::Stacking => g,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::from_key(s)
    }
}

/// `"sqrt"`, `"all"`/`"none"`, an integer count, or a fraction of `d`.
fn max_features(v: Option<&ParamValue>, d: usize) -> Result<MaxFeatures> {
    let bad = |v: &ParamValue| Error::param(format!("max_features must be sqrt, all, a count or a fraction, got {v}"));
    match v {
        None => Ok(MaxFeatures::All),
        Some(ParamValue::Text(s)) => match s.as_str() {
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "all" | "none" => Ok(MaxFeatures::All),
            _ => Err(bad(v.unwrap())),
        },
        Some(ParamValue::Int(k)) if *k >= 1 => Ok(MaxFeatures::Count(*k as usize)),
        Some(ParamValue::Float(f)) if *f > 0.0 && *f <= 1.0 => {
            if *f == 1.0 {
                Ok(MaxFeatures::All)
            } else {
                Ok(MaxFeatures::Count(((f * d as f64).floor() as usize).max(1)))
            }
        }
        Some(other) => Err(bad(other)),
    }
}

fn tree_params(p: &ParamSet, d: usize, style: SplitStyle, seed: u64) -> Result<TreeParams> {
    Ok(TreeParams {
        max_depth: p.opt_usize("max_depth")?,
        min_samples_split: p.usize_or("min_samples_split", 2)?,
        min_samples_leaf: p.usize_or("min_samples_leaf", 1)?,
        max_features: max_features(p.get("max_features"), d)?,
        split_style: style,
        seed,
    })
}

fn boost_params(p: &ParamSet, seed: u64, defaults: BoostParams) -> Result<BoostParams> {
    Ok(BoostParams {
        n_estimators: p.usize_or("n_estimators", defaults.n_estimators)?,
        learning_rate: p.f64_or("learning_rate", defaults.learning_rate)?,
        max_depth: p.usize_or("max_depth", defaults.max_depth)?,
        subsample: p.f64_or("subsample", defaults.subsample)?,
        seed,
    })
}

fn svr_params(p: &ParamSet) -> Result<SvrParams> {
    let kernel = p.text_or("kernel", "rbf")?;
    if kernel != "rbf" {
        return Err(Error::param(format!("only the rbf kernel is supported, got {kernel:?}")));
    }
    let d = SvrParams::default();
    let gamma = match p.get("gamma") {
        None => None,
        Some(ParamValue::Text(s)) if s == "scale" => None,
        Some(v) => Some(
            v.as_f64()
                .ok_or_else(|| Error::param(format!("gamma must be scale or a number, got {v}")))?,
        ),
    };
    Ok(SvrParams {
        c: p.f64_or("C", d.c)?,
        epsilon: p.f64_or("epsilon", d.epsilon)?,
        gamma,
        tol: p.f64_or("tol", d.tol)?,
        max_passes: d.max_passes,
    })
}

fn knn_params(p: &ParamSet) -> Result<KnnParams> {
    Ok(KnnParams {
        k: p.usize_or("n_neighbors", 5)?,
        metric: Metric::parse(p.text_or("metric", "euclidean")?)?,
        weights: Weighting::parse(p.text_or("weights", "uniform")?)?,
    })
}

fn mlp_params(p: &ParamSet, seed: u64) -> Result<MlpParams> {
    let d = MlpParams::default();
    let solver = p.text_or("solver", "adam")?;
    if solver != "adam" {
        return Err(Error::param(format!("only the adam solver is supported, got {solver:?}")));
    }
    let schedule = p.text_or("learning_rate", "constant")?;
    if schedule != "constant" {
        return Err(Error::param(format!(
            "only the constant learning_rate schedule is supported, got {schedule:?}"
        )));
    }
    let hidden = match p.get("hidden_layer_sizes") {
        None => d.hidden_layer_sizes.clone(),
        Some(ParamValue::Layers(l)) => l.clone(),
        Some(v) => vec![v
            .as_usize()
            .ok_or_else(|| Error::param(format!("hidden_layer_sizes must be a list of sizes, got {v}")))?],
    };
    let batch_size = match p.get("batch_size") {
        None => None,
        Some(ParamValue::Text(s)) if s == "auto" => None,
        Some(v) => Some(
            v.as_usize()
                .ok_or_else(|| Error::param(format!("batch_size must be auto or an integer, got {v}")))?,
        ),
    };
    Ok(MlpParams {
        hidden_layer_sizes: hidden,
        activation: Activation::parse(p.text_or("activation", "relu")?)?,
        alpha: p.f64_or("alpha", d.alpha)?,
        learning_rate_init: p.f64_or("learning_rate_init", d.learning_rate_init)?,
        batch_size,
        max_epochs: p.usize_or("max_iter", d.max_epochs)?,
        seed,
        ..d
    })
}

/// Member families for voting and stacking; `members` is a comma-separated
/// list of family keys, each fitted with its reference parameters.
fn composite_spec(family: Family, p: &ParamSet) -> Result<CompositeSpec> {
    let mut spec = match family {
        Family::Stacking => CompositeSpec::stacking_default(),
        _ => CompositeSpec::voting_default(),
    };
    if let Some(v) = p.get("members") {
        let list = v
            .as_text()
            .ok_or_else(|| Error::param(format!("members must be a comma-separated list, got {v}")))?;
        spec.members = list
            .split(',')
            .map(|name| {
                let f = Family::from_key(name.trim())?;
                if matches!(f, Family::Voting | Family::Stacking) {
                    return Err(Error::param(format!("{} cannot be a member", f.label())));
                }
                Ok(ModelSpec::reference(f))
            })
            .collect::<Result<_>>()?;
    }
    spec.folds = p.usize_or("cv", spec.folds)?;
    Ok(spec)
}

/// A family, its hyperparameters and the seed for all of its randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub params: ParamSet,
    pub seed: u64,
}

impl ModelSpec {
    /// Fails on parameter names the family does not know.
    pub fn new(family: Family, params: ParamSet) -> Result<Self> {
        params.check_names(family.param_names())?;
        Ok(ModelSpec {
            family,
            params,
            seed: 0,
        })
    }

    pub fn reference(family: Family) -> Self {
        ModelSpec {
            family,
            params: family.reference_params(),
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        ModelSpec { seed, ..self }
    }

    pub fn fit(&self, train: &Dataset) -> Result<FittedModel> {
        let y = train.targets()?;
        self.fit_xy(train.features().view(), &y)
    }

    /// Fits on raw features; the schema is the soil feature list when `x`
    /// has seven columns and `x0, x1, ...` otherwise.
    pub fn fit_xy(&self, x: ArrayView2<f64>, y: &[f64]) -> Result<FittedModel> {
        self.params.check_names(self.family.param_names())?;
        if x.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.nrows(),
                found: y.len(),
            });
        }
        check_finite(x)?;
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i + 1,
                column: "target".into(),
            });
        }
        let d = x.ncols();
        let schema: Vec<String> = if d == N_FEATURES {
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
        } else {
            (0..d).map(|j| format!("x{j}")).collect()
        };
        let standardizer = if self.family.scales_features() {
            Some(Standardizer::fit(x)?)
        } else {
            None
        };
        let scaled: Option<Array2<f64>> = standardizer.as_ref().map(|s| s.transform(x));
        let xs = scaled.as_ref().map_or(x, |s| s.view());
        let p = &self.params;
        let seed = self.seed;
        let body = match self.family {
            Family::DecisionTree => ModelBody::Tree(RegressionTree::fit(
                xs,
                y,
                &tree_params(p, d, SplitStyle::Best, seed)?,
            )?),
            Family::RandomForest | Family::ExtraTrees => {
                let extra = self.family == Family::ExtraTrees;
                let style = if extra { SplitStyle::RandomThreshold } else { SplitStyle::Best };
                ModelBody::Forest(TreeEnsemble::fit(
                    xs,
                    y,
                    &ForestParams {
                        n_estimators: p.usize_or("n_estimators", 100)?,
                        tree: tree_params(p, d, style, seed)?,
                        bootstrap: !extra,
                        seed,
                    },
                )?)
            }
            Family::Bagging => ModelBody::Bagging(BaggingModel::fit(
                xs,
                y,
                &BaggingParams {
                    n_estimators: p.usize_or("n_estimators", 10)?,
                    max_samples: p.f64_or("max_samples", 1.0)?,
                    max_features: p.f64_or("max_features", 1.0)?,
                    seed,
                },
            )?),
            Family::GradientBoosting => ModelBody::Boosted(BoostedTrees::fit_gradient(
                xs,
                y,
                &boost_params(p, seed, BoostParams::default())?,
            )?),
            Family::XGBoost => {
                let d = RegBoostParams::default();
                ModelBody::Boosted(BoostedTrees::fit_regularized(
                    xs,
                    y,
                    &RegBoostParams {
                        boost: boost_params(p, seed, d.boost)?,
                        gamma: p.f64_or("gamma", d.gamma)?,
                        colsample_bytree: p.f64_or("colsample_bytree", d.colsample_bytree)?,
                        lambda: p.f64_or("reg_lambda", d.lambda)?,
                    },
                )?)
            }
            Family::AdaBoost => {
                let d = AdaParams::default();
                ModelBody::AdaBoost(AdaBoostModel::fit(
                    xs,
                    y,
                    &AdaParams {
                        n_estimators: p.usize_or("n_estimators", d.n_estimators)?,
                        learning_rate: p.f64_or("learning_rate", d.learning_rate)?,
                        loss: AdaLoss::parse(p.text_or("loss", "linear")?)?,
                        max_depth: p.usize_or("max_depth", d.max_depth)?,
                        seed,
                    },
                )?)
            }
            Family::Svr => ModelBody::Svr(SvrModel::fit(xs, y, &svr_params(p)?)?),
            Family::KNeighbors => ModelBody::Knn(KnnModel::fit(xs, y, &knn_params(p)?)?),
            Family::Mlp => ModelBody::Mlp(MlpModel::fit(xs, y, &mlp_params(p, seed)?)?),
            Family::Voting => ModelBody::Voting(VotingModel::fit(xs, y, &composite_spec(self.family, p)?, seed)?),
            Family::Stacking => {
                ModelBody::Stacking(StackingModel::fit(xs, y, &composite_spec(self.family, p)?, seed)?)
            }
        };
        Ok(FittedModel {
            family: self.family,
            params: self.params.clone(),
            seed,
            schema,
            standardizer,
            body,
        })
    }
}

fn check_finite(x: ArrayView2<f64>) -> Result<()> {
    for (i, row) in x.rows().into_iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            let column = FEATURE_NAMES
                .get(j)
                .filter(|_| x.ncols() == N_FEATURES)
                .map_or_else(|| format!("x{j}"), |s| s.to_string());
            return Err(Error::NonFinite { row: i + 1, column });
        }
    }
    Ok(())
}

/// Fitted state of each family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelBody {
    Tree(RegressionTree),
    Forest(TreeEnsemble),
    Bagging(BaggingModel),
    Boosted(BoostedTrees),
    AdaBoost(AdaBoostModel),
    Svr(SvrModel),
    Knn(KnnModel),
    Mlp(MlpModel),
    Voting(VotingModel),
    Stacking(StackingModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub family: Family,
    pub params: ParamSet,
    pub seed: u64,
    pub schema: Vec<String>,
    pub standardizer: Option<Standardizer>,
    pub body: ModelBody,
}

#[derive(Serialize, Deserialize)]
struct Envelope<M> {
    format: String,
    version: u32,
    model: M,
}

impl FittedModel {
    /// One prediction per row of raw (unscaled) features.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.schema.len() {
            return Err(Error::Schema(format!(
                "model expects {} feature columns ({}), got {}",
                self.schema.len(),
                self.schema.join(","),
                x.ncols()
            )));
        }
        if x.nrows() == 0 {
            return Ok(Vec::new());
        }
        check_finite(x)?;
        let scaled = self.standardizer.as_ref().map(|s| s.transform(x));
        let xs = scaled.as_ref().map_or(x, |s| s.view());
        let out = match &self.body {
            ModelBody::Tree(m) => m.predict(xs),
            ModelBody::Forest(m) => m.predict(xs),
            ModelBody::Bagging(m) => m.predict(xs),
            ModelBody::Boosted(m) => m.predict(xs),
            ModelBody::AdaBoost(m) => m.predict(xs)?,
            ModelBody::Svr(m) => m.predict(xs),
            ModelBody::Knn(m) => m.predict(xs),
            ModelBody::Mlp(m) => m.predict(xs),
            ModelBody::Voting(m) => m.predict(xs)?,
            ModelBody::Stacking(m) => m.predict(xs)?,
        };
        Ok(out)
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.predict(ds.features().view())
    }

    pub fn to_json(&self) -> Result<String> {
        let env = Envelope {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            model: self,
        };
        Ok(serde_json::to_string_pretty(&env)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope<serde_json::Value> = serde_json::from_str(text)?;
        if env.format != FORMAT_NAME {
            return Err(Error::Format(format!("not a model file (format {:?})", env.format)));
        }
        if env.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                env.version
            )));
        }
        Ok(serde_json::from_value(env.model)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
