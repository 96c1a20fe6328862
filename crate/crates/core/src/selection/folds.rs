use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Train/validation index pairs for k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n: usize,
    pub folds: Vec<(Vec<usize>, Vec<usize>)>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }
}

/// Shuffles `0..n` with `seed` and cuts it into `k` consecutive validation
/// blocks; the first `n % k` blocks hold one extra index. Index lists are
/// sorted.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::param(format!(
            "fold count must lie in 2..={n}, got {k}"
        )));
    }
    let perm = rng::permutation(n, &mut rng::rng(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut val = perm[start..start + size].to_vec();
        let mut train: Vec<usize> = perm[..start].iter().chain(&perm[start + size..]).copied().collect();
        val.sort_unstable();
        train.sort_unstable();
        folds.push((train, val));
        start += size;
    }
    Ok(FoldPlan { n, folds })
}
