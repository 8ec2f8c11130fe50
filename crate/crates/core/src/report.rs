//! Artifact serialization: density reports as JSON (full structure,
//! round-trippable) and CSV (one line per table row).
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! identical computations produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::estimators::DensityReport;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "functional,r,R_or_t,estimate,error_bound,flags";

/// CSV lines (without header) for one report.
pub fn report_csv_rows(report: &DensityReport) -> String {
    let mut out = String::new();
    for row in &report.table.rows {
        let r = row.r.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            report.functional,
            r,
            row.radius,
            row.estimate,
            row.error_bound,
            row.flags.join(";")
        )
        .expect("string write");
    }
    out
}

/// Write a header plus the rows of every report.
pub fn write_csv(path: &Path, reports: &[DensityReport]) -> Result<()> {
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for report in reports {
        text.push_str(&report_csv_rows(report));
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Pretty-printed JSON for any serializable artifact.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serialize: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Read back a report list written by [`write_json`].
pub fn read_reports_json(path: &Path) -> Result<Vec<DensityReport>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("report json: {e}")))
}
