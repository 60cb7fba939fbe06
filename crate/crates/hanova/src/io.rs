//! CSV ingestion.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use hanova_core::design::{Dataset, DesignError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("input has no data rows")]
    EmptyFile,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    /// `row` counts data rows from 1 (the header is not counted).
    #[error("row {row}, column `{col}`: cannot parse `{value}`")]
    UnparseableValue { row: usize, col: String, value: String },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Design(#[from] DesignError),
}

pub fn read_csv(path: &Path, response: &str, factors: &[&str]) -> Result<Dataset, InputError> {
    let file = File::open(path).map_err(|source| InputError::Io { path: path.display().to_string(), source })?;
    read_csv_from(file, response, factors)
}

/// Parse a headed CSV: `response` as a real column, each of `factors` as a
/// categorical column (levels numbered by first appearance).
pub fn read_csv_from<R: Read>(reader: R, response: &str, factors: &[&str]) -> Result<Dataset, InputError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| InputError::Csv(e.to_string()))?.clone();
    if headers.is_empty() {
        return Err(InputError::EmptyFile);
    }
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| InputError::MissingColumn(name.to_string()))
    };
    let y_col = column(response)?;
    let f_cols = factors.iter().map(|f| column(f)).collect::<Result<Vec<_>, _>>()?;

    let mut y = Vec::new();
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); factors.len()];
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| InputError::Csv(e.to_string()))?;
        let raw = record.get(y_col).unwrap_or("");
        let value: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| InputError::UnparseableValue { row, col: response.to_string(), value: raw.to_string() })?;
        y.push(value);
        for (k, &c) in f_cols.iter().enumerate() {
            let label = record.get(c).unwrap_or("");
            if label.is_empty() {
                return Err(InputError::UnparseableValue { row, col: factors[k].to_string(), value: String::new() });
            }
            labels[k].push(label.to_string());
        }
    }
    if y.is_empty() {
        return Err(InputError::EmptyFile);
    }
    let columns = factors.iter().map(|f| f.to_string()).zip(labels).collect();
    Ok(Dataset::from_labels(y, columns)?)
}
