//! CSV and JSON input/output. Writes go to a temporary file in the target
//! directory and are renamed into place, so readers never see partial output.

use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView2};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// A numeric table with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub data: Array2<f64>,
}

/// Reads a CSV file with a header row and numeric cells.
pub fn read_matrix(path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::InsufficientData(format!("{} is empty", path.display())));
    }
    let d = headers.len();
    let mut values = Vec::new();
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != d {
            return Err(Error::Parse(format!(
                "row {} has {} fields, expected {d}",
                i + 2,
                rec.len()
            )));
        }
        for (k, cell) in rec.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Parse(format!("row {}, column {}: {cell:?} is not a number", i + 2, k + 1))
            })?;
            values.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::InsufficientData(format!("{} has no data rows", path.display())));
    }
    let data = Array2::from_shape_vec((n, d), values).expect("row lengths checked");
    Ok(Table { headers, data })
}

/// Default column names `X1, ..., Xd`.
pub fn default_headers(d: usize) -> Vec<String> {
    (1..=d).map(|k| format!("X{k}")).collect()
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Serialises rows of string cells as CSV bytes with a header row.
pub fn csv_bytes<R, I, S>(headers: &[S], rows: R) -> Result<Vec<u8>>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
    S: AsRef<str>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(headers.iter().map(|h| h.as_ref()))?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Writes a numeric matrix as CSV.
pub fn write_matrix<S: AsRef<str>>(path: &Path, headers: &[S], data: ArrayView2<f64>) -> Result<()> {
    if headers.len() != data.ncols() {
        return Err(Error::DimensionError(format!(
            "{} headers for {} columns",
            headers.len(),
            data.ncols()
        )));
    }
    let rows = data
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>());
    write_atomic(path, &csv_bytes(headers, rows)?)
}

/// Writes a single column.
pub fn write_column(path: &Path, header: &str, values: &[f64]) -> Result<()> {
    let rows = values.iter().map(|v| vec![v.to_string()]);
    write_atomic(path, &csv_bytes(&[header], rows)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = array![[1.5, -2.0], [0.1, 1e-300]];
        write_matrix(&p, &["a", "b"], m.view()).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("a,b\n") && text.ends_with('\n'));
        let t = read_matrix(&p).unwrap();
        assert_eq!(t.headers, vec!["a", "b"]);
        assert_eq!(t.data, m);
    }

    #[test]
    fn empty_and_malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        std::fs::write(&p, "").unwrap();
        assert!(read_matrix(&p).is_err());
        std::fs::write(&p, "a,b\n").unwrap();
        assert!(matches!(read_matrix(&p), Err(Error::InsufficientData(_))));
        std::fs::write(&p, "a,b\n1,x\n").unwrap();
        assert!(matches!(read_matrix(&p), Err(Error::Parse(_))));
    }
}
