//! Tabular renderings of an [`EvalReport`].

use std::io::Write;

use super::benchmark::EvalReport;
use crate::error::Result;
use crate::metrics::Metrics;

pub const REPORT_COLUMNS: [&str; 11] = [
    "family",
    "best_params",
    "train_r2",
    "train_mae",
    "train_rmse",
    "val_r2",
    "val_mae",
    "val_rmse",
    "test_r2",
    "test_mae",
    "test_rmse",
];

fn cells(m: &Metrics) -> [f64; 3] {
    [m.r2, m.mae, m.rmse]
}

/// One header row plus one row per family, floats at full round-trip
/// precision; failed rows carry `NaN` metrics.
pub fn write_report_csv(report: &EvalReport, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_COLUMNS)?;
    for row in &report.rows {
        let mut rec = vec![row.family.label().to_string(), row.best_params.to_string()];
        for m in [&row.train, &row.validation, &row.test] {
            rec.extend(cells(m).iter().map(|v| v.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// A fixed-width table with three decimals, best family first, followed by
/// the reasons for any failed rows.
pub fn render_text(report: &EvalReport) -> String {
    let header: Vec<String> = REPORT_COLUMNS.iter().map(|s| s.to_string()).collect();
    let mut table = vec![header];
    for row in &report.rows {
        let mut line = vec![row.family.label().to_string(), row.best_params.to_string()];
        for m in [&row.train, &row.validation, &row.test] {
            line.extend(cells(m).iter().map(|v| if v.is_nan() { "-".to_string() } else { format!("{v:.3}") }));
        }
        table.push(line);
    }
    let widths: Vec<usize> = (0..REPORT_COLUMNS.len())
        .map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, line) in table.iter().enumerate() {
        let parts: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, &w))| if c < 2 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    let seeds: Vec<String> = report.seeds.iter().map(|s| s.to_string()).collect();
    out.push_str(&format!("\nMeans over seeds {}.\n", seeds.join(", ")));
    let failed: Vec<_> = report.rows.iter().filter_map(|r| r.failure.as_ref().map(|f| (r.family, f))).collect();
    if !failed.is_empty() {
        out.push_str("\nFailed:\n");
        for (family, reason) in failed {
            out.push_str(&format!("  {}: {reason}\n", family.label()));
        }
    }
    out
}
