//! Plain-text matrices and vectors: whitespace-separated decimals, one
//! matrix row per line. Blank lines and lines starting with `#` are skipped.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

fn rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    msg: format!("not a finite decimal: {tok:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(row);
    }
    Ok(out)
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let rows = rows(text)?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, msg: "empty matrix".into() });
    }
    if let Some(pos) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Parse {
            line: pos + 1,
            msg: format!("row has {} entries, expected {ncols}", rows[pos].len()),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// A vector written either on one line or one entry per line.
pub fn parse_vector(text: &str) -> Result<DVector<f64>> {
    let values: Vec<f64> = rows(text)?.into_iter().flatten().collect();
    if values.is_empty() {
        return Err(Error::Parse { line: 0, msg: "empty vector".into() });
    }
    Ok(DVector::from_vec(values))
}

pub fn format_int_vector(x: &[i64]) -> String {
    x.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
}
