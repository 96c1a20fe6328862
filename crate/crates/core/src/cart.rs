//! CART regression trees.
//!
//! Trees are grown depth-first with greedy axis-aligned splits. Rows enter a
//! fit with non-negative integer multiplicities, so bootstrap resamples and
//! row subsamples are handled without copying the data. Each feature column
//! is sorted once per fit; nodes keep their rows as contiguous ranges of the
//! sorted per-feature lists and partition them stably when split.
//!
//! Two split criteria share the same search:
//! * variance: maximize the reduction of the children's weighted SSE,
//!   `w_l w_r / w (mean_l - mean_r)^2`; leaves predict the mean target.
//! * second order (squared loss, unit hessians): maximize
//!   `½[G_l²/(H_l+λ) + G_r²/(H_r+λ) − G²/(H+λ)] − γ` over gradient sums;
//!   leaves predict `−G/(H+λ)`.
//!
//! Candidate thresholds are midpoints between consecutive distinct values
//! (best-split style) or one uniform draw from the node's value range per
//! candidate feature (random-threshold style). Candidates are scanned by
//! increasing feature index, then increasing threshold; a later candidate
//! replaces the incumbent only when it beats it by more than a relative
//! [`TIE_TOLERANCE`], so ties go to the lowest feature and smallest threshold.

use ndarray::ArrayView2;
use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Relative margin by which a split score must beat the incumbent.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    /// `ceil(sqrt(d))` features per split.
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            MaxFeatures::Count(k) => k.min(n_features),
        }
        .max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStyle {
    Best,
    RandomThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub split_style: SplitStyle,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            split_style: SplitStyle::Best,
            seed: 0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::param("min_samples_split must be at least 2"));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::param("min_samples_leaf must be at least 1"));
        }
        if let MaxFeatures::Count(k) = self.max_features {
            if k < 1 || k > n_features {
                return Err(Error::param(format!(
                    "max_features must lie in 1..={n_features}, got {k}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Criterion {
    Variance,
    SecondOrder { lambda: f64, gamma: f64 },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowConfig {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub split_style: SplitStyle,
}

impl GrowConfig {
    pub fn from_params(p: &TreeParams) -> Self {
        GrowConfig {
            criterion: Criterion::Variance,
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            min_samples_leaf: p.min_samples_leaf,
            max_features: p.max_features,
            split_style: p.split_style,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Criterion score of the split (SSE reduction, or second-order gain
        /// before subtracting γ).
        gain: f64,
    },
}

/// A fitted regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub n_features: usize,
    pub nodes: Vec<Node>,
}

/// Column-major copy of a feature matrix with each column's row order.
pub(crate) struct Presorted {
    pub n_rows: usize,
    cols: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: ArrayView2<f64>) -> Self {
        let n_rows = x.nrows();
        let cols: Vec<Vec<f64>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
        let order = cols
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..n_rows as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Presorted {
            n_rows,
            cols,
            order,
        }
    }

    pub fn n_features(&self) -> usize {
        self.cols.len()
    }
}

/// Multiplicity of each row in `rows`.
pub(crate) fn row_counts(n_rows: usize, rows: &[usize]) -> Vec<f64> {
    let mut w = vec![0.0; n_rows];
    for &r in rows {
        w[r] += 1.0;
    }
    w
}

struct Builder<'a> {
    data: &'a Presorted,
    target: &'a [f64],
    weight: &'a [f64],
    cfg: GrowConfig,
    k_features: usize,
    allowed: Vec<usize>,
    rng: Rng,
    order: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    n_left: usize,
    score: f64,
}

impl Builder<'_> {
    fn leaf_value(&self, sum: f64, w: f64) -> f64 {
        match self.cfg.criterion {
            Criterion::Variance => sum / w,
            Criterion::SecondOrder { lambda, .. } => -sum / (w + lambda),
        }
    }

    fn score(&self, wl: f64, sl: f64, w: f64, s: f64) -> f64 {
        let (wr, sr) = (w - wl, s - sl);
        match self.cfg.criterion {
            Criterion::Variance => {
                let d = sl / wl - sr / wr;
                wl * wr / w * d * d
            }
            Criterion::SecondOrder { lambda, .. } => {
                0.5 * (sl * sl / (wl + lambda) + sr * sr / (wr + lambda) - s * s / (w + lambda))
            }
        }
    }

    fn accepts(&self, score: f64) -> bool {
        match self.cfg.criterion {
            Criterion::Variance => score > 0.0,
            Criterion::SecondOrder { gamma, .. } => score - gamma > 0.0,
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.allowed.len();
        if self.k_features >= d {
            return self.allowed.clone();
        }
        let mut f: Vec<usize> = index::sample(&mut self.rng, d, self.k_features)
            .into_iter()
            .map(|i| self.allowed[i])
            .collect();
        f.sort_unstable();
        f
    }

    fn find_split(&mut self, lo: usize, hi: usize, w: f64, s: f64) -> Option<Candidate> {
        let min_leaf = self.cfg.min_samples_leaf as f64;
        let mut best: Option<Candidate> = None;
        let beats = |score: f64, best: &Option<Candidate>| match best {
            None => true,
            Some(b) => score > b.score + TIE_TOLERANCE * b.score.abs(),
        };
        for f in self.candidate_features() {
            let col = &self.data.cols[f];
            let list = &self.order[f][lo..hi];
            match self.cfg.split_style {
                SplitStyle::Best => {
                    let (mut wl, mut sl) = (0.0, 0.0);
                    for i in 0..list.len() - 1 {
                        let r = list[i] as usize;
                        wl += self.weight[r];
                        sl += self.weight[r] * self.target[r];
                        if w - wl < min_leaf {
                            break;
                        }
                        let (v, next) = (col[r], col[list[i + 1] as usize]);
                        if v == next || wl < min_leaf {
                            continue;
                        }
                        let score = self.score(wl, sl, w, s);
                        if beats(score, &best) {
                            let mut threshold = 0.5 * (v + next);
                            if threshold >= next {
                                threshold = v;
                            }
                            best = Some(Candidate {
                                feature: f,
                                threshold,
                                n_left: i + 1,
                                score,
                            });
                        }
                    }
                }
                SplitStyle::RandomThreshold => {
                    let lo_v = col[list[0] as usize];
                    let hi_v = col[list[list.len() - 1] as usize];
                    if lo_v >= hi_v {
                        continue;
                    }
                    let threshold = self.rng.random_range(lo_v..hi_v);
                    let (mut wl, mut sl, mut n_left) = (0.0, 0.0, 0);
                    for &r in list {
                        let r = r as usize;
                        if col[r] > threshold {
                            break;
                        }
                        wl += self.weight[r];
                        sl += self.weight[r] * self.target[r];
                        n_left += 1;
                    }
                    if wl < min_leaf || w - wl < min_leaf {
                        continue;
                    }
                    let score = self.score(wl, sl, w, s);
                    if beats(score, &best) {
                        best = Some(Candidate {
                            feature: f,
                            threshold,
                            n_left,
                            score,
                        });
                    }
                }
            }
        }
        best.filter(|c| self.accepts(c.score))
    }

    fn partition(&mut self, lo: usize, hi: usize, split: &Candidate) {
        let list = &self.order[split.feature][lo..hi];
        for (i, &r) in list.iter().enumerate() {
            self.goes_left[r as usize] = i < split.n_left;
        }
        for ai in 0..self.allowed.len() {
            let f = self.allowed[ai];
            if f == split.feature {
                continue;
            }
            let list = &mut self.order[f][lo..hi];
            self.scratch.clear();
            let mut write = 0;
            for i in 0..list.len() {
                let r = list[i];
                if self.goes_left[r as usize] {
                    list[write] = r;
                    write += 1;
                } else {
                    self.scratch.push(r);
                }
            }
            list[write..].copy_from_slice(&self.scratch);
        }
    }

    fn grow(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        let (mut w, mut s) = (0.0, 0.0);
        let (mut t_min, mut t_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in &self.order[self.allowed[0]][lo..hi] {
            let r = r as usize;
            w += self.weight[r];
            s += self.weight[r] * self.target[r];
            t_min = t_min.min(self.target[r]);
            t_max = t_max.max(self.target[r]);
        }
        self.nodes.push(Node::Leaf {
            value: self.leaf_value(s, w),
            samples: w as usize,
        });
        let depth_ok = self.cfg.max_depth.is_none_or(|d| depth < d);
        if !depth_ok || w < self.cfg.min_samples_split as f64 || hi - lo < 2 || t_min == t_max {
            return id;
        }
        let Some(split) = self.find_split(lo, hi, w, s) else {
            return id;
        };
        self.partition(lo, hi, &split);
        let mid = lo + split.n_left;
        let left = self.grow(lo, mid, depth + 1);
        let right = self.grow(mid, hi, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            gain: split.score,
        };
        id
    }
}

impl RegressionTree {
    /// Fits a variance-criterion tree on all rows of `x`.
    pub fn fit(x: ArrayView2<f64>, y: &[f64], params: &TreeParams) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.nrows(),
                found: y.len(),
            });
        }
        params.validate(x.ncols())?;
        let data = Presorted::new(x);
        let weight = vec![1.0; x.nrows()];
        Ok(Self::fit_weighted(
            &data,
            y,
            &weight,
            &GrowConfig::from_params(params),
            None,
            rng::rng(params.seed),
        ))
    }

    /// Grows a tree over the rows with positive `weight` (multiplicities).
    /// `features` restricts splitting to a sorted subset of columns.
    pub(crate) fn fit_weighted(
        data: &Presorted,
        target: &[f64],
        weight: &[f64],
        cfg: &GrowConfig,
        features: Option<&[usize]>,
        rng: Rng,
    ) -> Self {
        let allowed: Vec<usize> = match features {
            Some(f) => f.to_vec(),
            None => (0..data.n_features()).collect(),
        };
        let order: Vec<Vec<u32>> = data
            .order
            .iter()
            .enumerate()
            .map(|(f, o)| {
                if allowed.binary_search(&f).is_err() {
                    return Vec::new();
                }
                o.iter().copied().filter(|&r| weight[r as usize] > 0.0).collect()
            })
            .collect();
        let n_active = order[allowed[0]].len();
        let mut b = Builder {
            data,
            target,
            weight,
            cfg: *cfg,
            k_features: cfg.max_features.resolve(allowed.len()),
            allowed,
            rng,
            order,
            goes_left: vec![false; data.n_rows],
            scratch: Vec::with_capacity(n_active),
            nodes: Vec::new(),
        };
        if n_active == 0 {
            b.nodes.push(Node::Leaf {
                value: 0.0,
                samples: 0,
            });
        } else {
            b.grow(0, n_active, 0);
        }
        RegressionTree {
            n_features: data.n_features(),
            nodes: b.nodes,
        }
    }

    /// Prediction for one row given by feature accessor.
    pub fn predict_with(&self, feature: impl Fn(usize) -> f64) -> f64 {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature: f,
                    threshold,
                    left,
                    right,
                    ..
                } => id = if feature(*f) <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.predict_with(|f| row[f])
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict_with(|f| r[f])).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value, samples } => Some((*value, *samples)),
            _ => None,
        })
    }

    pub fn splits(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split {
                feature,
                threshold,
                gain,
                ..
            } => Some((*feature, *threshold, *gain)),
            _ => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn sse(y: &[f64], yhat: &[f64]) -> f64 {
        y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum()
    }

    #[test]
    fn constant_target_is_a_single_leaf() {
        let x = array![[0.0, 1.0], [1.0, 5.0], [2.0, 3.0]];
        let t = RegressionTree::fit(x.view(), &[7.0; 3], &TreeParams::default()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict_row(&[9.0, 9.0]), 7.0);
    }

    #[test]
    fn stump_on_step_data() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let p = TreeParams {
            max_depth: Some(1),
            ..TreeParams::default()
        };
        let t = RegressionTree::fit(x.view(), &[0.0, 0.0, 10.0, 10.0], &p).unwrap();
        let (f, thr, _) = t.splits().next().unwrap();
        assert_eq!(f, 0);
        assert!(thr > 1.0 && thr < 2.0);
        assert_eq!(t.predict_row(&[0.5]), 0.0);
        assert_eq!(t.predict_row(&[2.5]), 10.0);
    }

    #[test]
    fn min_samples_leaf_can_force_a_leaf() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let p = TreeParams {
            min_samples_leaf: 3,
            ..TreeParams::default()
        };
        let t = RegressionTree::fit(x.view(), &[1.0, 2.0, 3.0, 10.0], &p).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict_row(&[0.0]), 4.0);
    }

    #[test]
    fn invalid_params_and_empty_input() {
        let x = array![[0.0], [1.0]];
        let bad = TreeParams {
            min_samples_split: 1,
            ..TreeParams::default()
        };
        assert!(RegressionTree::fit(x.view(), &[0.0, 1.0], &bad).is_err());
        let empty = Array2::<f64>::zeros((0, 1));
        assert!(RegressionTree::fit(empty.view(), &[], &TreeParams::default()).is_err());
    }

    fn random_data(seed: u64, n: usize, d: usize) -> (Array2<f64>, Vec<f64>) {
        let mut r = rng::rng(seed);
        let x = Array2::from_shape_fn((n, d), |_| r.random_range(-5.0f64..5.0));
        let y = (0..n).map(|i| x[[i, 0]].sin() * 3.0 + x[[i, 1]] + r.random_range(-0.5..0.5)).collect();
        (x, y)
    }

    #[test]
    fn fully_grown_tree_interpolates() {
        for seed in 0..5 {
            let (x, y) = random_data(seed, 60, 3);
            let t = RegressionTree::fit(x.view(), &y, &TreeParams::default()).unwrap();
            assert!(sse(&y, &t.predict(x.view())) < 1e-20);
        }
    }

    #[test]
    fn deeper_trees_never_fit_worse() {
        let (x, y) = random_data(3, 80, 4);
        let mut prev = f64::INFINITY;
        for depth in 0..10 {
            let p = TreeParams {
                max_depth: Some(depth),
                ..TreeParams::default()
            };
            let t = RegressionTree::fit(x.view(), &y, &p).unwrap();
            assert!(t.depth() <= depth);
            let e = sse(&y, &t.predict(x.view()));
            assert!(e <= prev + 1e-9, "depth {depth}: {e} > {prev}");
            prev = e;
        }
    }

    #[test]
    fn leaves_respect_min_samples_leaf() {
        let (x, y) = random_data(11, 100, 3);
        let p = TreeParams {
            min_samples_leaf: 7,
            ..TreeParams::default()
        };
        let t = RegressionTree::fit(x.view(), &y, &p).unwrap();
        assert!(t.leaves().all(|(_, n)| n >= 7));
    }

    #[test]
    fn deterministic_under_seed() {
        let (x, y) = random_data(5, 70, 5);
        for style in [SplitStyle::Best, SplitStyle::RandomThreshold] {
            let p = TreeParams {
                max_features: MaxFeatures::Count(2),
                split_style: style,
                seed: 99,
                ..TreeParams::default()
            };
            let a = RegressionTree::fit(x.view(), &y, &p).unwrap();
            let b = RegressionTree::fit(x.view(), &y, &p).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sqrt_of_seven_is_three() {
        assert_eq!(MaxFeatures::Sqrt.resolve(7), 3);
        assert_eq!(MaxFeatures::All.resolve(7), 7);
    }

    #[test]
    fn multiplicities_match_duplicated_rows() {
        let (x, y) = random_data(8, 30, 3);
        let rows = [0usize, 0, 1, 2, 2, 2, 5, 7, 7, 9, 11, 13, 13, 20, 29];
        let cfg = GrowConfig::from_params(&TreeParams::default());
        let weighted = RegressionTree::fit_weighted(
            &Presorted::new(x.view()),
            &y,
            &row_counts(30, &rows),
            &cfg,
            None,
            rng::rng(0),
        );
        let xd = x.select(ndarray::Axis(0), &rows);
        let yd: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
        let dup = RegressionTree::fit(xd.view(), &yd, &TreeParams::default()).unwrap();
        for (a, b) in weighted.predict(x.view()).iter().zip(dup.predict(x.view())) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
