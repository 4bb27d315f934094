// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV and JSON report writers.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::editor::JobReport;
use crate::error::{Error, Result};
use crate::oracle::ErasureMetrics;

/// One row of a spectrum listing: `i, sigma, r_i, f, g`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub i: usize,
    pub sigma: f64,
    pub r_i: f64,
    pub f: f64,
    pub g: f64,
}

#[derive(Serialize)]
struct MetricsRow {
    alpha: String,
    suppression_residual: f64,
    retention_error: f64,
    shared_error: f64,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Header: `alpha,suppression_residual,retention_error,shared_error`.
pub fn write_metrics_csv(path: impl AsRef<Path>, metrics: &[ErasureMetrics]) -> Result<()> {
    write_csv(
        path.as_ref(),
        metrics.iter().map(|m| MetricsRow {
            alpha: m.alpha.to_string(),
            suppression_residual: m.suppression_residual,
            retention_error: m.retention_error,
            shared_error: m.shared_error,
        }),
    )
}

pub fn write_spectrum_csv(path: impl AsRef<Path>, rows: &[SpectrumRow]) -> Result<()> {
    write_csv(path.as_ref(), rows)
}

/// Writes the job summary as pretty-printed JSON.
pub fn emit_report(report: &JobReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}
