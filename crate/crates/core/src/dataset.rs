//! Soil records and the column-schema'd dataset built from them.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input feature names in schema order.
pub const FEATURE_NAMES: [&str; 7] = ["G", "S", "FC", "LL", "PI", "MDD", "OMC"];

/// Name of the target column.
pub const TARGET_NAME: &str = "CBR";

pub const N_FEATURES: usize = FEATURE_NAMES.len();

/// Allowed absolute deviation of G + S + FC from 100.
pub const COMPOSITION_TOLERANCE: f64 = 1.5;

/// One soil record: grain-size composition, Atterberg limits, Proctor
/// compaction results and (optionally) the measured CBR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoilSample {
    /// Gravel content, percent by mass.
    pub g: f64,
    /// Sand content, percent.
    pub s: f64,
    /// Fines content, percent.
    pub fc: f64,
    /// Liquid limit, percent.
    pub ll: f64,
    /// Plasticity index, percent.
    pub pi: f64,
    /// Maximum dry density, kN/m³.
    pub mdd: f64,
    /// Optimum moisture content, percent.
    pub omc: f64,
    /// California Bearing Ratio, percent.
    pub cbr: Option<f64>,
}

impl SoilSample {
    pub fn features(&self) -> [f64; N_FEATURES] {
        [self.g, self.s, self.fc, self.ll, self.pi, self.mdd, self.omc]
    }

    pub fn from_features(f: [f64; N_FEATURES], cbr: Option<f64>) -> Self {
        SoilSample {
            g: f[0],
            s: f[1],
            fc: f[2],
            ll: f[3],
            pi: f[4],
            mdd: f[5],
            omc: f[6],
            cbr,
        }
    }

    /// Returns the first violated invariant, named by rule.
    pub fn check(&self) -> Result<(), &'static str> {
        let f = self.features();
        if f.iter().chain(self.cbr.iter()).any(|v| !v.is_finite()) {
            return Err("all values finite");
        }
        if [self.g, self.s, self.fc, self.ll, self.pi, self.omc]
            .iter()
            .chain(self.cbr.iter())
            .any(|&v| v < 0.0)
        {
            return Err("G, S, FC, LL, PI, OMC, CBR >= 0");
        }
        if self.mdd <= 0.0 {
            return Err("MDD > 0");
        }
        if (self.g + self.s + self.fc - 100.0).abs() > COMPOSITION_TOLERANCE {
            return Err("G + S + FC = 100 (within 1.5)");
        }
        if self.pi > self.ll {
            return Err("PI ≤ LL");
        }
        Ok(())
    }
}

/// An ordered collection of soil samples with a fixed feature ordering.
///
/// Either every row carries a CBR value or none does.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    samples: Vec<SoilSample>,
    has_target: bool,
}

impl Dataset {
    /// Builds a dataset, validating every row (row numbers in errors are
    /// 1-based).
    pub fn new(samples: Vec<SoilSample>) -> Result<Self> {
        let has_target = samples.first().is_some_and(|s| s.cbr.is_some());
        for (i, s) in samples.iter().enumerate() {
            if s.cbr.is_some() != has_target {
                return Err(Error::Validation {
                    row: i + 1,
                    rule: "uniform presence of CBR".into(),
                });
            }
            s.check().map_err(|rule| Error::Validation {
                row: i + 1,
                rule: rule.into(),
            })?;
        }
        Ok(Dataset {
            samples,
            has_target,
        })
    }

    pub fn empty(has_target: bool) -> Self {
        Dataset {
            samples: Vec::new(),
            has_target,
        }
    }

    pub fn samples(&self) -> &[SoilSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn has_target(&self) -> bool {
        self.has_target
    }

    /// Feature matrix, one row per sample, columns in [`FEATURE_NAMES`] order.
    pub fn features(&self) -> Array2<f64> {
        let mut x = Array2::zeros((self.len(), N_FEATURES));
        for (mut row, s) in x.rows_mut().into_iter().zip(&self.samples) {
            for (dst, v) in row.iter_mut().zip(s.features()) {
                *dst = v;
            }
        }
        x
    }

    pub fn targets(&self) -> Result<Vec<f64>> {
        if !self.has_target {
            return Err(Error::MissingTarget);
        }
        Ok(self.samples.iter().map(|s| s.cbr.unwrap_or(f64::NAN)).collect())
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i]).collect(),
            has_target: self.has_target,
        }
    }

    /// Same rows with the target removed.
    pub fn without_target(&self) -> Dataset {
        Dataset {
            samples: self
                .samples
                .iter()
                .map(|s| SoilSample { cbr: None, ..*s })
                .collect(),
            has_target: false,
        }
    }
}
