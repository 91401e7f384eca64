//! CSV tables and JSON check reports.

use crate::CliError;
use serde::Serialize;
use std::path::Path;

/// Fixed 17-significant-digit formatting, so reruns are byte-identical.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// A header and rows of pre-formatted cells.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| fmt17(x)).collect());
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// One acceptance check with its measured value and admissible band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub measured: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn within(id: impl Into<String>, measured: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let pass = measured.is_finite() && lower.is_none_or(|l| measured >= l) && upper.is_none_or(|u| measured <= u);
        Check { id: id.into(), measured, lower, upper, pass }
    }

    pub fn at_most(id: impl Into<String>, measured: f64, upper: f64) -> Self {
        Self::within(id, measured, None, Some(upper))
    }

    pub fn equals(id: impl Into<String>, measured: f64, expected: f64) -> Self {
        Self::within(id, measured, Some(expected), Some(expected))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub status: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

/// Aggregate checks: `empty` without checks, `fail` naming each failed id.
pub fn report(checks: Vec<Check>) -> Report {
    if checks.is_empty() {
        return Report { status: "empty", failed: Vec::new(), checks };
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.id.clone()).collect();
    Report { status: if failed.is_empty() { "pass" } else { "fail" }, failed, checks }
}

pub fn write_report(rep: &Report, path: &Path) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(rep).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
