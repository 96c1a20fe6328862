//! Plot-ready tables for a fitted model on a labelled test set: actual
//! against predicted, a residual histogram and a per-sample series.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::FittedModel;

/// Residual bin width in CBR percentage points.
pub const HIST_BIN_WIDTH: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl PlotData {
    pub fn new(actual: Vec<f64>, predicted: Vec<f64>) -> Result<Self> {
        if actual.len() != predicted.len() {
            return Err(Error::LengthMismatch {
                expected: actual.len(),
                found: predicted.len(),
            });
        }
        Ok(PlotData { actual, predicted })
    }

    /// Predicts every row of `test`, which must carry the target column.
    pub fn from_model(model: &FittedModel, test: &Dataset) -> Result<Self> {
        let actual = test.targets()?;
        let predicted = model.predict_dataset(test)?;
        Self::new(actual, predicted)
    }

    /// `actual - predicted` per row.
    pub fn residuals(&self) -> Vec<f64> {
        self.actual.iter().zip(&self.predicted).map(|(a, p)| a - p).collect()
    }

    pub fn histogram(&self) -> Vec<Bin> {
        histogram(&self.residuals(), HIST_BIN_WIDTH)
    }

    pub fn write_scatter(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["actual", "predicted"])?;
        for (a, p) in self.actual.iter().zip(&self.predicted) {
            out.write_record([a.to_string(), p.to_string()])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_histogram(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["bin_left", "bin_right", "count"])?;
        for b in self.histogram() {
            out.write_record([b.left.to_string(), b.right.to_string(), b.count.to_string()])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_series(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["sample_index", "actual", "predicted"])?;
        for (i, (a, p)) in self.actual.iter().zip(&self.predicted).enumerate() {
            out.write_record([i.to_string(), a.to_string(), p.to_string()])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Writes `scatter.csv`, `errors_hist.csv` and `series.csv` into `dir`,
    /// creating it if needed.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let create = |name: &str| {
            let p = dir.join(name);
            fs::File::create(&p).map_err(|e| Error::io(p, e))
        };
        self.write_scatter(create("scatter.csv")?)?;
        self.write_histogram(create("errors_hist.csv")?)?;
        self.write_series(create("series.csv")?)
    }
}

/// Half-open bins `[k·width, (k+1)·width)` covering every value, from the
/// bin holding the minimum to the bin holding the maximum, with no gaps.
/// Empty input gives no bins.
pub fn histogram(values: &[f64], width: f64) -> Vec<Bin> {
    let idx = |v: f64| (v / width).floor() as i64;
    let (Some(lo), Some(hi)) = (
        values.iter().map(|&v| idx(v)).min(),
        values.iter().map(|&v| idx(v)).max(),
    ) else {
        return Vec::new();
    };
    let mut bins: Vec<Bin> = (lo..=hi)
        .map(|k| Bin {
            left: k as f64 * width,
            right: (k + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for &v in values {
        bins[(idx(v) - lo) as usize].count += 1;
    }
    bins
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_binned_residuals() {
        let bins = histogram(&[-7.0, -2.0, 1.0, 12.0], 5.0);
        let got: Vec<(f64, f64, usize)> = bins.iter().map(|b| (b.left, b.right, b.count)).collect();
        assert_eq!(
            got,
            vec![
                (-10.0, -5.0, 1),
                (-5.0, 0.0, 1),
                (0.0, 5.0, 1),
                (5.0, 10.0, 0),
                (10.0, 15.0, 1)
            ]
        );
    }

    #[test]
    fn bin_edges_are_half_open() {
        let bins = histogram(&[0.0, 5.0, -5.0], 5.0);
        assert_eq!(bins.len(), 3);
        assert!(bins.iter().all(|b| b.count == 1));
        assert_eq!(bins[0].left, -5.0);
        assert!(histogram(&[], 5.0).is_empty());
    }

    #[test]
    fn perfect_predictions_land_in_the_zero_bin() {
        let y = vec![3.0, 17.5, 40.0];
        let pd = PlotData::new(y.clone(), y).unwrap();
        let bins = pd.histogram();
        assert_eq!(bins.len(), 1);
        assert_eq!((bins[0].left, bins[0].right, bins[0].count), (0.0, 5.0, 3));
    }

    #[test]
    fn files_have_one_row_per_sample() {
        let pd = PlotData::new(vec![1.0, 2.0, 30.0], vec![1.5, 2.0, 20.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        pd.write_all(dir.path()).unwrap();
        let read = |n: &str| fs::read_to_string(dir.path().join(n)).unwrap();
        assert_eq!(read("scatter.csv"), "actual,predicted\n1,1.5\n2,2\n30,20\n");
        assert_eq!(read("series.csv").lines().count(), 4);
        let hist = read("errors_hist.csv");
        let total: usize = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
        assert_eq!(total, 3);
        assert!(PlotData::new(vec![1.0], vec![]).is_err());
    }
}
