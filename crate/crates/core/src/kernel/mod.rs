//! Kernel and instance-based regressors. Both expect standardized features.

mod knn;
mod svr;

pub use knn::{KnnModel, KnnParams, Metric, Weighting};
pub use svr::{scale_gamma, solve_dual, DualSolution, SvrModel, SvrParams};
