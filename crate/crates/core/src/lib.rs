//! Regression models and a benchmarking harness for predicting the
//! California Bearing Ratio of soils from index properties.
//!
//! The crate covers data handling (CSV ingestion, a synthetic soil
//! generator, splits and scaling), twelve regression model families behind
//! a single [`ModelSpec`] / [`FittedModel`] interface, cross-validated grid
//! search, seed-averaged benchmark reports and plot-ready output tables.

pub mod cart;
pub mod data;
pub mod dataset;
pub mod ensembles;
pub mod error;
pub mod kernel;
pub mod metrics;
pub mod model;
pub mod neural;
pub mod params;
pub mod plots;
pub mod rng;
pub mod selection;

pub use dataset::{Dataset, SoilSample, FEATURE_NAMES, TARGET_NAME};
pub use error::{Error, Result};
pub use metrics::Metrics;
pub use model::{Family, FittedModel, ModelSpec};
pub use params::{ParamGrid, ParamSet, ParamValue};
