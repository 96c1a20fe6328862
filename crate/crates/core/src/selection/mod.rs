//! Cross-validation, grid search and the repeated-seed benchmark protocol.

mod benchmark;
mod cv;
mod folds;
mod report;

pub use benchmark::{run_benchmark, BenchmarkPlan, EvalReport, ReportRow, SeedResult};
pub use cv::{cross_validate, fit_fold, grid_search, CandidateResult, CvResult, GridResult};
pub use folds::{make_folds, FoldPlan};
pub use report::{render_text, write_report_csv, REPORT_COLUMNS};
