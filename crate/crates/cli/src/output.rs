//! CSV and `key: value` writers. Floats use Rust's shortest round-trip
//! formatting, so every number parses back to the identical `f64`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::CliError;

pub fn num(v: f64) -> String {
    // Negative zero only arises from `-(0.0)` in differences; print it plainly.
    if v == 0.0 {
        return "0.0".to_string();
    }
    format!("{v:?}")
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_key_values(path: &Path, pairs: &[(&str, String)]) -> Result<(), CliError> {
    let mut text = String::new();
    for (k, v) in pairs {
        let _ = writeln!(text, "{k}: {v}");
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Rows `(stage, name, row, col, value)` for every entry of every matrix.
pub fn matrix_rows(name: &str, series: &[DMatrix<f64>]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for (stage, m) in series.iter().enumerate() {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.push(vec![
                    stage.to_string(),
                    name.to_string(),
                    i.to_string(),
                    j.to_string(),
                    num(m[(i, j)]),
                ]);
            }
        }
    }
    out
}
