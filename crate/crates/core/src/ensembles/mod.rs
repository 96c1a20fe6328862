//! Tree ensembles, boosting, and model combinations.

mod adaboost;
mod bagging;
mod boosting;
mod composite;
mod forest;

pub use adaboost::{weighted_median, AdaBoostModel, AdaLoss, AdaParams};
pub use bagging::{BaggingModel, BaggingParams};
pub use boosting::{BoostParams, BoostedTrees, RegBoostParams};
pub use composite::{CompositeSpec, StackingModel, VotingModel};
pub use forest::{ForestParams, TreeEnsemble};
