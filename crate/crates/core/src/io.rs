//! CSV and JSON readers/writers shared by the analyses and the CLI.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::twonn::LocalEstimates;

/// Writes `row,estimate` lines, one per value.
pub fn write_estimates_csv(estimates: &LocalEstimates, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["row", "estimate"])
        .map_err(|e| Error::csv(path, e))?;
    for (row, v) in estimates.rows.iter().zip(&estimates.values) {
        w.write_record([row.to_string(), v.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a `row,estimate` file written by [`write_estimates_csv`].
pub fn read_estimates_csv(path: &Path) -> Result<LocalEstimates> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["row", "estimate"] {
        return Err(Error::Format(format!(
            "{}: expected header 'row,estimate', found '{}'",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad =
            |what: &str| Error::Format(format!("{}: line {}: bad {what}", path.display(), i + 2));
        let row: usize = rec[0].trim().parse().map_err(|_| bad("row"))?;
        let v: f64 = rec[1].trim().parse().map_err(|_| bad("estimate"))?;
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Data(format!(
                "{}: line {}: estimate {v} is not a finite non-negative number",
                path.display(),
                i + 2
            )));
        }
        rows.push(row);
        values.push(v);
    }
    Ok(LocalEstimates {
        values,
        rows,
        params: None,
        degenerate: Vec::new(),
    })
}

/// Metrics keyed by step, from a CSV with header `step,<name>...`. Empty
/// cells are treated as missing.
pub type MetricsByStep = BTreeMap<u64, BTreeMap<String, f64>>;

pub fn read_metrics_csv(path: &Path) -> Result<MetricsByStep> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.get(0).map(str::trim) != Some("step") {
        return Err(Error::Format(format!(
            "{}: first column must be 'step'",
            path.display()
        )));
    }
    let names: Vec<String> = headers
        .iter()
        .skip(1)
        .map(|h| h.trim().to_string())
        .collect();
    let mut out = MetricsByStep::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = i + 2;
        let step: u64 = rec[0].trim().parse().map_err(|_| {
            Error::Format(format!(
                "{}: line {line}: bad step '{}'",
                path.display(),
                &rec[0]
            ))
        })?;
        let mut metrics = BTreeMap::new();
        for (name, cell) in names.iter().zip(rec.iter().skip(1)) {
            let cell = cell.trim();
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::Format(format!(
                    "{}: line {line}: bad value '{cell}' for {name}",
                    path.display()
                ))
            })?;
            metrics.insert(name.clone(), v);
        }
        if out.insert(step, metrics).is_some() {
            return Err(Error::Input(format!(
                "{}: step {step} appears more than once",
                path.display()
            )));
        }
    }
    Ok(out)
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
