//! CSV tables and matrices.
//!
//! Every float goes through [`fmt_float`]: scientific notation with 12
//! significant digits, with `inf`, `-inf` and `nan` spelled out. Sample
//! matrices are stored one sample per line, so an `r × N` matrix becomes a
//! file with `N` data rows and `r` named columns.

use std::path::Path;

use ldinfomax_core::nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.11e}")
    }
}

pub fn parse_float(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

/// Writes a header and rows of already formatted fields.
pub fn write_table<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        let fields: Vec<String> = row.into_iter().collect();
        w.write_record(&fields).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Column names `prefix1 … prefixK`.
pub fn column_names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

/// Writes the columns of `x` as lines, one named field per row of `x`.
pub fn write_samples(path: &Path, prefix: &str, x: &DMatrix<f64>) -> Result<()> {
    let names = column_names(prefix, x.nrows());
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    write_table(
        path,
        &header,
        x.column_iter().map(|c| c.iter().map(|&v| fmt_float(v)).collect::<Vec<_>>()),
    )
}

/// Writes the rows of `x` as lines.
pub fn write_rows(path: &Path, prefix: &str, x: &DMatrix<f64>) -> Result<()> {
    write_samples(path, prefix, &x.transpose())
}

/// Reads a numeric table, returning the header and a `lines × fields` matrix.
pub fn read_table(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let k = header.len();
    let mut data = Vec::new();
    let mut lines = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        for (j, field) in rec.iter().enumerate() {
            let v = parse_float(field).ok_or_else(|| Error::Parse {
                path: path.into(),
                message: format!("data line {}, column {}: {field:?} is not a number", i + 1, j + 1),
            })?;
            data.push(v);
        }
        lines += 1;
    }
    if k == 0 || lines == 0 {
        return Err(Error::Parse {
            path: path.into(),
            message: "no data".into(),
        });
    }
    Ok((header, DMatrix::from_row_slice(lines, k, &data)))
}

/// Inverse of [`write_samples`]: returns a `fields × lines` matrix.
pub fn read_samples(path: &Path) -> Result<DMatrix<f64>> {
    Ok(read_table(path)?.1.transpose())
}

/// Inverse of [`write_rows`].
pub fn read_rows(path: &Path) -> Result<DMatrix<f64>> {
    Ok(read_table(path)?.1)
}
