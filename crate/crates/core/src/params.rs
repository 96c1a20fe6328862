//! Named hyperparameter assignments and Cartesian grids over them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One hyperparameter value. Strings cover enumerations such as
/// `"sqrt"`, `"relu"` or `"none"`; lists are layer sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Layers(Vec<usize>),
    Text(String),
}

impl ParamValue {
    pub fn text(s: &str) -> Self {
        ParamValue::Text(s.to_string())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_usize(&self) -> Option<usize> {
        match self {
            ParamValue::Int(i) if *i >= 0 => Some(*i as usize),
            ParamValue::Float(f) if *f >= 0.0 && f.fract() == 0.0 => Some(*f as usize),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            ParamValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_none_text(&self) -> bool {
        matches!(self, ParamValue::Text(s) if s.eq_ignore_ascii_case("none"))
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Float(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::text(v)
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(x) => write!(f, "{x}"),
            ParamValue::Text(s) => write!(f, "{s}"),
            ParamValue::Layers(l) => {
                let parts: Vec<String> = l.iter().map(usize::to_string).collect();
                write!(f, "({})", parts.join("x"))
            }
        }
    }
}

/// A named assignment of hyperparameter values, ordered by name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamSet(pub BTreeMap<String, ParamValue>);

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: impl Into<ParamValue>) -> Self {
        self.0.insert(name.to_string(), value.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.0.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Fails on any name outside `allowed`.
    pub fn check_names(&self, allowed: &[&str]) -> Result<()> {
        for name in self.0.keys() {
            if !allowed.contains(&name.as_str()) {
                return Err(Error::param(format!(
                    "unknown parameter {name:?} (expected one of {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn f64_or(&self, name: &str, default: f64) -> Result<f64> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::param(format!("{name} must be numeric, got {v}"))),
        }
    }

    pub fn usize_or(&self, name: &str, default: usize) -> Result<usize> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v
                .as_usize()
                .ok_or_else(|| Error::param(format!("{name} must be a non-negative integer, got {v}"))),
        }
    }

    /// Integer, or unbounded when absent or `"none"`.
    pub fn opt_usize(&self, name: &str) -> Result<Option<usize>> {
        match self.get(name) {
            None => Ok(None),
            Some(v) if v.is_none_text() => Ok(None),
            Some(v) => v
                .as_usize()
                .map(Some)
                .ok_or_else(|| Error::param(format!("{name} must be an integer or none, got {v}"))),
        }
    }

    pub fn text_or<'a>(&'a self, name: &str, default: &'a str) -> Result<&'a str> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v
                .as_text()
                .ok_or_else(|| Error::param(format!("{name} must be a string, got {v}"))),
        }
    }
}

impl fmt::Display for ParamSet {
    /// `{name: value, ...}`, or `N/A` when empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "N/A");
        }
        write!(f, "{{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}: {v}")?;
        }
        write!(f, "}}")
    }
}

/// Candidate values per hyperparameter; candidates are the Cartesian
/// product, enumerated with the last name (alphabetically) varying fastest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamGrid(pub BTreeMap<String, Vec<ParamValue>>);

impl ParamGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, values: Vec<ParamValue>) -> Self {
        self.0.insert(name.to_string(), values);
        self
    }

    /// Number of candidates: the product of the list lengths.
    pub fn len(&self) -> usize {
        self.0.values().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, params: &ParamSet) -> bool {
        params
            .0
            .iter()
            .all(|(k, v)| self.0.get(k).is_some_and(|vals| vals.contains(v)))
    }

    pub fn candidates(&self) -> Result<Vec<ParamSet>> {
        if let Some((name, _)) = self.0.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::param(format!("grid list for {name} is empty")));
        }
        let mut out = vec![ParamSet::new()];
        for (name, values) in &self.0 {
            out = out
                .into_iter()
                .flat_map(|base| {
                    values
                        .iter()
                        .map(move |v| base.clone().with(name, v.clone()))
                })
                .collect();
        }
        Ok(out)
    }
}

/// Builds a `Vec<ParamValue>` from heterogeneous literals.
#[macro_export]
macro_rules! values {
    ($($v:expr),* $(,)?) => {
        vec![$($crate::params::ParamValue::from($v)),*]
    };
}
