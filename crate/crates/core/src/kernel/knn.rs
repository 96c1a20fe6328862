//! k-nearest-neighbour regression over stored (standardized) training rows.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Manhattan,
    Euclidean,
}

impl Metric {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "manhattan" => Ok(Metric::Manhattan),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(Error::param(format!(
                "metric must be manhattan or euclidean, got {other:?}"
            ))),
        }
    }

    pub fn distance(self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        let pairs = a.iter().zip(b);
        match self {
            Metric::Manhattan => pairs.map(|(u, v)| (u - v).abs()).sum(),
            Metric::Euclidean => pairs.map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    /// Inverse distance; exact matches take over the prediction.
    Distance,
}

impl Weighting {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "uniform" => Ok(Weighting::Uniform),
            "distance" => Ok(Weighting::Distance),
            other => Err(Error::param(format!(
                "weights must be uniform or distance, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    pub metric: Metric,
    pub weights: Weighting,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            k: 5,
            metric: Metric::Euclidean,
            weights: Weighting::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub params: KnnParams,
    pub x: Array2<f64>,
    pub y: Vec<f64>,
}

impl KnnModel {
    pub fn fit(x: ArrayView2<f64>, y: &[f64], p: &KnnParams) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.nrows(),
                found: y.len(),
            });
        }
        if p.k < 1 || p.k > y.len() {
            return Err(Error::param(format!(
                "n_neighbors must lie in 1..={}, got {}",
                y.len(),
                p.k
            )));
        }
        Ok(KnnModel {
            params: *p,
            x: x.to_owned(),
            y: y.to_vec(),
        })
    }

    /// The `k` nearest training rows as `(index, distance)`, nearest first;
    /// equal distances are ordered by row index.
    pub fn neighbors(&self, query: ArrayView1<f64>) -> Vec<(usize, f64)> {
        let metric = self.params.metric;
        let mut d: Vec<(usize, f64)> = self
            .x
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, r)| (i, metric.distance(r, query)))
            .collect();
        let by_distance = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
        let k = self.params.k;
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, by_distance);
            d.truncate(k);
        }
        d.sort_by(by_distance);
        d
    }

    pub fn predict_row(&self, query: ArrayView1<f64>) -> f64 {
        let nb = self.neighbors(query);
        match self.params.weights {
            Weighting::Uniform => nb.iter().map(|&(i, _)| self.y[i]).sum::<f64>() / nb.len() as f64,
            Weighting::Distance => {
                let exact: Vec<f64> = nb.iter().filter(|(_, d)| *d == 0.0).map(|&(i, _)| self.y[i]).collect();
                if !exact.is_empty() {
                    return exact.iter().sum::<f64>() / exact.len() as f64;
                }
                let (num, den) = nb.iter().fold((0.0, 0.0), |(num, den), &(i, d)| {
                    (num + self.y[i] / d, den + 1.0 / d)
                });
                num / den
            }
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }
}
