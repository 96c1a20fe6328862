//! Data ingestion, splitting, scaling and the synthetic soil generator.

mod io;
mod split;
mod standardize;
mod synthetic;

pub use io::{load_csv, read_csv, save_csv, write_csv};
pub use split::{split, test_count, SplitSpec};
pub use standardize::{Standardizer, TargetScaler};
pub use synthetic::{generate_synthetic, surrogate_cbr, GeneratorConfig};
