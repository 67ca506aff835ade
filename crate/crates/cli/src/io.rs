//! File formats: design CSV (comma-separated, no header, one row per
//! observation) and response files (one 0/1 per line). Parse errors carry
//! line numbers.

use std::path::Path;

use nalgebra::DMatrix;

use logvol_core::fit::BinaryResponse;
use logvol_core::DesignMatrix;

use crate::error::{CliError, Result};
use crate::jsonfmt::csv_f64;

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

/// Loads a design matrix; `zero_row_tol` feeds the zero-row count used by the
/// selection criteria (0 = exact zeros).
pub fn load_design(path: &Path, zero_row_tol: f64) -> Result<DesignMatrix> {
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (col, field) in line.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| CliError::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("field {} is not a number: '{}'", col + 1, field.trim()),
            })?;
            if !v.is_finite() {
                return Err(CliError::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: "non-finite entry".into(),
                });
            }
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(CliError::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: format!("ragged row: expected {w} fields, got {}", row.len()),
                });
            }
            _ => {}
        }
        rows.push(row);
    }
    let n = rows.len();
    let q = width.ok_or_else(|| CliError::Parse {
        path: path.into(),
        line: 0,
        msg: "empty design file".into(),
    })?;
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let m = DMatrix::from_row_slice(n, q, &flat);
    Ok(DesignMatrix::with_zero_row_tol(m, zero_row_tol)?)
}

/// Loads a response: one 0 or 1 per line.
pub fn load_response(path: &Path) -> Result<BinaryResponse> {
    let text = read_to_string(path)?;
    let mut bits = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "0" => bits.push(0u8),
            "1" => bits.push(1u8),
            other => {
                return Err(CliError::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: format!("expected 0 or 1, got '{other}'"),
                });
            }
        }
    }
    Ok(BinaryResponse::new(bits)?)
}

/// Checks response length against the design, naming both lengths.
pub fn check_lengths(x: &DesignMatrix, y: &BinaryResponse) -> Result<()> {
    if x.n() != y.len() {
        return Err(CliError::Usage(format!(
            "design has {} rows but response has {} entries",
            x.n(),
            y.len()
        )));
    }
    Ok(())
}

pub fn save_design(path: &Path, x: &DesignMatrix) -> Result<()> {
    let mut out = String::new();
    for i in 0..x.n() {
        let row: Vec<String> = (0..x.q()).map(|j| csv_f64(x.matrix()[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| CliError::Io { path: path.into(), source })
}

pub fn save_response(path: &Path, y: &BinaryResponse) -> Result<()> {
    let mut out = String::new();
    for &b in y.as_slice() {
        out.push(if b == 1 { '1' } else { '0' });
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| CliError::Io { path: path.into(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}
