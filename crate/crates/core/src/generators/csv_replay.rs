//! Replays a recorded stream from CSV.
//!
//! Header: `f0,...,f{p-1},label[,delay]`. Rows are numbered from 1 for the
//! header line, so the first data row is row 2.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stream::Instance;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CsvSchema {
    /// Expected number of feature columns; `None` accepts whatever the
    /// header declares.
    pub features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvStream {
    pub instances: Vec<Instance>,
    /// Per-row label delays when the file carries a `delay` column.
    pub delays: Option<Vec<i64>>,
}

pub fn csv_replay(path: impl AsRef<Path>, schema: CsvSchema) -> Result<CsvStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |row: usize, message: String| Error::Csv {
        path: path.to_path_buf(),
        row,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .quoting(false)
        .trim(csv::Trim::All)
        .from_reader(file);

    let header = reader
        .headers()
        .map_err(|e| csv_err(1, e.to_string()))?
        .clone();
    let cols: Vec<&str> = header.iter().collect();
    let has_delay = cols.last() == Some(&"delay");
    let n_features = cols.len().saturating_sub(1 + has_delay as usize);
    let expected: Vec<String> = (0..n_features)
        .map(|j| format!("f{j}"))
        .chain(std::iter::once("label".to_string()))
        .chain(has_delay.then(|| "delay".to_string()))
        .collect();
    if cols != expected || n_features == 0 {
        return Err(csv_err(
            1,
            format!(
                "header must be f0,...,f{{p-1}},label[,delay], got `{}`",
                cols.join(",")
            ),
        ));
    }
    if let Some(p) = schema.features {
        if p != n_features {
            return Err(csv_err(
                1,
                format!("expected {p} feature columns, header has {n_features}"),
            ));
        }
    }

    let mut instances = Vec::new();
    let mut delays = has_delay.then(Vec::new);
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| csv_err(row, e.to_string()))?;
        if record.len() != cols.len() {
            return Err(csv_err(
                row,
                format!("expected {} cells, got {}", cols.len(), record.len()),
            ));
        }
        let mut features = Vec::with_capacity(n_features);
        for (j, cell) in record.iter().take(n_features).enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| csv_err(row, format!("column f{j}: `{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(csv_err(row, format!("column f{j}: non-finite value")));
            }
            features.push(v);
        }
        let label = match &record[n_features] {
            "0" => false,
            "1" => true,
            other => return Err(csv_err(row, format!("label must be 0 or 1, got `{other}`"))),
        };
        if let Some(delays) = delays.as_mut() {
            let cell = &record[n_features + 1];
            let d: i64 = cell
                .parse()
                .map_err(|_| csv_err(row, format!("delay `{cell}` is not an integer")))?;
            if d < 0 {
                return Err(csv_err(row, format!("negative delay {d}")));
            }
            delays.push(d);
        }
        instances.push(Instance::new(i as u64, features, label));
    }
    Ok(CsvStream { instances, delays })
}
