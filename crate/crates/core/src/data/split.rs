use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng;

/// Random train/test partition settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// When set, benchmark runs reuse the split drawn from `seed` for every
    /// repetition and vary only model randomness.
    pub fixed_split: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
            fixed_split: false,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(self, seed: u64) -> Self {
        SplitSpec { seed, ..self }
    }
}

/// Number of held-out rows: `ceil(n * (1 - train_fraction))`, so n = 382 at
/// 0.8 gives 77 test rows.
pub fn test_count(n: usize, train_fraction: f64) -> usize {
    let raw = n as f64 * (1.0 - train_fraction);
    // absorb representation error such as 10 * (1 - 0.8) = 1.9999999999999996
    (raw - 1e-9).ceil().max(0.0) as usize
}

/// Shuffles row indices with `spec.seed` and splits them; each part keeps the
/// original row order.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = split_indices(ds.len(), spec)?;
    if !ds.has_target() {
        return Err(Error::MissingTarget);
    }
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

pub(crate) fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::param(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let n_test = test_count(n, spec.train_fraction);
    if n_test == 0 || n_test >= n {
        return Err(Error::param(format!(
            "{n} rows cannot be split into non-empty train and test parts"
        )));
    }
    let perm = rng::permutation(n, &mut rng::rng(spec.seed));
    let mut test: Vec<usize> = perm[..n_test].to_vec();
    let mut train: Vec<usize> = perm[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}
