//! CSV ingestion for designs, responses and combination matrices.

use std::fs::File;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

fn io_error(path: &Path, err: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: err.to_string(),
    }
}

/// Reads a comma-separated matrix of reals. With `header`, the first line is skipped.
pub fn read_matrix(path: impl AsRef<Path>, header: bool) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    read_matrix_from(file, header, &path.display().to_string())
}

/// Reads a matrix from any reader; `name` labels error messages.
pub fn read_matrix_from<R: std::io::Read>(reader: R, header: bool, name: &str) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        path: name.to_string(),
        line,
        column,
        message,
    };

    let mut data = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, 0, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_err(
                    line,
                    record.len().min(w) + 1,
                    format!("expected {w} fields, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, col + 1, format!("cannot parse '{field}' as a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, col + 1, format!("non-finite value '{field}'")));
            }
            data.push(v);
        }
        rows += 1;
    }
    let cols = width.ok_or_else(|| Error::Empty(format!("{name} contains no data")))?;
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// Reads a vector stored one value per line.
pub fn read_vector(path: impl AsRef<Path>, header: bool) -> Result<DVector<f64>> {
    let path = path.as_ref();
    let m = read_matrix(path, header)?;
    if m.ncols() != 1 {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            column: 2,
            message: format!("expected one value per line, found {} columns", m.ncols()),
        });
    }
    Ok(DVector::from_column_slice(m.as_slice()))
}
