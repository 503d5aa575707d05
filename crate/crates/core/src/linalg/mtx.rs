//! Matrix Market reader/writer for real dense matrices.
//!
//! Reads `coordinate` and `array` formats with `real` or `integer` fields
//! and `general` or `symmetric` symmetry. Writes `coordinate real general`
//! with 17 significant digits so values round-trip exactly.

use std::fmt::Write as _;

use crate::linalg::LinalgError;
use crate::matrix::Matrix;

fn perr(msg: impl Into<String>) -> LinalgError {
    LinalgError::Parse(msg.into())
}

pub fn read_mtx(text: &str) -> Result<Matrix<f64>, LinalgError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| perr("empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if h.len() < 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(perr("missing %%MatrixMarket matrix header"));
    }
    let coordinate = match h[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(perr(format!("unsupported format '{other}'"))),
    };
    if h[3] != "real" && h[3] != "integer" {
        return Err(perr(format!("unsupported field '{}'", h[3])));
    }
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(perr(format!("unsupported symmetry '{other}'"))),
    };
    let mut body = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size = body.next().ok_or_else(|| perr("missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| perr(format!("bad size entry '{t}'"))))
        .collect::<Result<_, _>>()?;
    let num = |t: &str| t.parse::<f64>().map_err(|_| perr(format!("bad number '{t}'")));

    if coordinate {
        let [rows, cols, nnz] = dims[..] else { return Err(perr("coordinate size line needs 3 entries")) };
        let mut m = Matrix::zeros(rows, cols);
        let mut count = 0;
        for line in body {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 3 {
                return Err(perr(format!("bad entry line '{line}'")));
            }
            let i: usize = t[0].parse().map_err(|_| perr(format!("bad row index '{}'", t[0])))?;
            let j: usize = t[1].parse().map_err(|_| perr(format!("bad column index '{}'", t[1])))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(perr(format!("index ({i},{j}) out of range")));
            }
            let v = num(t[2])?;
            m[(i - 1, j - 1)] += v;
            if symmetric && i != j {
                m[(j - 1, i - 1)] += v;
            }
            count += 1;
        }
        if count != nnz {
            return Err(perr(format!("expected {nnz} entries, found {count}")));
        }
        Ok(m)
    } else {
        let [rows, cols] = dims[..] else { return Err(perr("array size line needs 2 entries")) };
        let vals: Vec<f64> = body.flat_map(str::split_whitespace).map(num).collect::<Result<_, _>>()?;
        let mut m = Matrix::zeros(rows, cols);
        let mut it = vals.into_iter();
        // column-major; symmetric stores the lower triangle only
        for j in 0..cols {
            let start = if symmetric { j } else { 0 };
            for i in start..rows {
                let v = it.next().ok_or_else(|| perr("too few array entries"))?;
                m[(i, j)] = v;
                if symmetric {
                    m[(j, i)] = v;
                }
            }
        }
        if it.next().is_some() {
            return Err(perr("too many array entries"));
        }
        Ok(m)
    }
}

pub fn write_mtx(m: &Matrix<f64>) -> String {
    let entries: Vec<(usize, usize, f64)> = (0..m.rows())
        .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
        .filter_map(|(i, j)| (m[(i, j)] != 0.0).then(|| (i, j, m[(i, j)])))
        .collect();
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.rows(), m.cols(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
    }
    out
}

pub fn read_mtx_file(path: &std::path::Path) -> Result<Matrix<f64>, LinalgError> {
    let text = std::fs::read_to_string(path).map_err(|e| perr(format!("{}: {e}", path.display())))?;
    read_mtx(&text)
}
