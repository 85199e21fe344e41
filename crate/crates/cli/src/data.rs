//! CSV ingestion and output.

use std::fs;
use std::io::Write;
use std::path::Path;

use igmdsr_core::{Matrix, RawDataset};

use crate::error::{CliError, CliResult};

/// Reads a numeric CSV. With `labels_col`, that column (0-based) is kept as
/// text labels and excluded from the feature matrix.
pub fn read_dataset(path: &Path, header: bool, labels_col: Option<usize>) -> CliResult<RawDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if let Some(lc) = labels_col {
            if lc >= record.len() {
                return Err(CliError::Input(format!(
                    "row {line}: label column {lc} out of range ({} fields)",
                    record.len()
                )));
            }
        }
        let mut width = 0;
        for (c, field) in record.iter().enumerate() {
            if Some(c) == labels_col {
                labels.push(field.to_string());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| {
                CliError::Input(format!(
                    "row {line}, column {}: '{field}' is not a number",
                    c + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "row {line}, column {}: non-finite value '{field}'",
                    c + 1
                )));
            }
            values.push(v);
            width += 1;
        }
        match cols {
            None => cols = Some(width),
            Some(w) if w != width => {
                return Err(CliError::Input(format!(
                    "row {line}: {width} numeric fields, expected {w}"
                )))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols
        .filter(|&c| c > 0)
        .ok_or_else(|| CliError::Input(format!("{}: no numeric data", path.display())))?;
    let u = Matrix::new(rows, cols, values)?;
    let labels = labels_col.map(|_| labels);
    Ok(RawDataset::new(u, labels)?)
}

/// Writes `bytes` to a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Input(format!("{} is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| CliError::Input(format!("writing {}: {e}", path.display())))
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.iter_rows() {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn log_csv(costs: &[f64]) -> String {
    let mut out = String::from("epoch,cost\n");
    for (i, c) in costs.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, fmt_f64(*c)));
    }
    out
}
