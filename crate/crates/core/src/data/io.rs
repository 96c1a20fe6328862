//! CSV reading and writing for soil datasets.
//!
//! Dialect: comma delimited, '.' decimal point, UTF-8, a single header line.
//! The header must name exactly the seven feature columns, optionally
//! followed by `CBR`, in schema order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::dataset::{Dataset, SoilSample, FEATURE_NAMES, N_FEATURES, TARGET_NAME};
use crate::error::{Error, Result};

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

fn check_header(header: &csv::StringRecord) -> Result<bool> {
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    for name in FEATURE_NAMES {
        if !cols.contains(&name) {
            return Err(Error::Schema(format!("missing column {name}")));
        }
    }
    if let Some(extra) = cols
        .iter()
        .find(|c| !FEATURE_NAMES.contains(c) && **c != TARGET_NAME)
    {
        return Err(Error::Schema(format!("unexpected column {extra}")));
    }
    let has_target = cols.contains(&TARGET_NAME);
    let expected: Vec<&str> = FEATURE_NAMES
        .iter()
        .copied()
        .chain(has_target.then_some(TARGET_NAME))
        .collect();
    if cols != expected {
        return Err(Error::Schema(format!(
            "columns must be ordered {}",
            expected.join(",")
        )));
    }
    Ok(has_target)
}

pub fn read_csv(reader: impl Read) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let has_target = check_header(rdr.headers()?)?;
    let width = N_FEATURES + usize::from(has_target);
    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != width {
            return Err(Error::Parse {
                row,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let mut values = [0.0; N_FEATURES + 1];
        for (j, cell) in record.iter().enumerate() {
            values[j] = cell.parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("column {}: cannot parse {cell:?} as a number", column_name(j)),
            })?;
        }
        let mut features = [0.0; N_FEATURES];
        features.copy_from_slice(&values[..N_FEATURES]);
        let cbr = has_target.then_some(values[N_FEATURES]);
        let sample = SoilSample::from_features(features, cbr);
        sample.check().map_err(|rule| Error::Validation {
            row,
            rule: rule.into(),
        })?;
        samples.push(sample);
    }
    if samples.is_empty() {
        return Ok(Dataset::empty(has_target));
    }
    Dataset::new(samples)
}

fn column_name(j: usize) -> &'static str {
    FEATURE_NAMES.get(j).copied().unwrap_or(TARGET_NAME)
}

/// Writes the dataset in the canonical schema, plus any extra trailing
/// columns given as `(name, values)`.
pub fn write_csv(ds: &Dataset, extra: &[(&str, &[f64])], writer: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    if ds.has_target() {
        header.push(TARGET_NAME);
    }
    header.extend(extra.iter().map(|(name, _)| *name));
    w.write_record(&header)?;
    for (i, s) in ds.samples().iter().enumerate() {
        let mut rec: Vec<String> = s.features().iter().map(f64::to_string).collect();
        if let Some(c) = s.cbr {
            rec.push(c.to_string());
        }
        for (_, col) in extra {
            rec.push(col[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, &[], std::io::BufWriter::new(file))
}
