//! MatrixMarket coordinate files (real, general) and plain-text vectors.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use thiserror::Error;

use crate::linalg::{CooMatrix, CsrMatrix};

#[derive(Debug, Error)]
pub enum MmError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported MatrixMarket header: {0}")]
    Unsupported(String),
}

/// Writes `a` with full double precision (round-trips exactly).
pub fn write_matrix<W: Write>(mut w: W, a: &CsrMatrix<f64>) -> Result<(), MmError> {
    let mut buf = String::with_capacity(32 * a.nnz() + 64);
    buf.push_str("%%MatrixMarket matrix coordinate real general\n");
    writeln!(buf, "{} {} {}", a.nrows(), a.ncols(), a.nnz()).expect("string write");
    for (r, c, v) in a.iter() {
        writeln!(buf, "{} {} {:e}", r + 1, c + 1, v).expect("string write");
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

/// Reads a coordinate file. `symmetric` storage is expanded; `pattern`
/// entries get value 1.
pub fn read_matrix<R: Read>(r: R) -> Result<CsrMatrix<f64>, MmError> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l?,
        None => {
            return Err(MmError::Parse {
                line: 1,
                msg: "empty file".into(),
            })
        }
    };
    let h: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" {
        return Err(MmError::Unsupported(header));
    }
    let pattern = match h[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        _ => return Err(MmError::Unsupported(header)),
    };
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        _ => return Err(MmError::Unsupported(header)),
    };
    let mut size: Option<(usize, usize, usize)> = None;
    let mut coo: Option<CooMatrix<f64>> = None;
    let mut seen = 0;
    for (ln, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let err = |msg: &str| MmError::Parse {
            line: ln + 1,
            msg: msg.to_string(),
        };
        let fields: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(err("expected 'rows cols entries'"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| err("bad size field"));
                let (m, n, nnz) = (p(fields[0])?, p(fields[1])?, p(fields[2])?);
                size = Some((m, n, nnz));
                coo = Some(CooMatrix::with_capacity(m, n, nnz));
            }
            Some((m, n, _)) => {
                let want = if pattern { 2 } else { 3 };
                if fields.len() < want {
                    return Err(err("too few fields"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| err("bad index"));
                let (i, j) = (p(fields[0])?, p(fields[1])?);
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(err("index out of range"));
                }
                let v = if pattern {
                    1.0
                } else {
                    fields[2].parse::<f64>().map_err(|_| err("bad value"))?
                };
                let c = coo.as_mut().expect("size line seen");
                c.push(i - 1, j - 1, v);
                if symmetric && i != j {
                    c.push(j - 1, i - 1, v);
                }
                seen += 1;
            }
        }
    }
    let (_, _, nnz) = size.ok_or(MmError::Parse {
        line: 0,
        msg: "missing size line".into(),
    })?;
    if seen != nnz {
        return Err(MmError::Parse {
            line: 0,
            msg: format!("expected {nnz} entries, found {seen}"),
        });
    }
    Ok(coo.expect("size line seen").to_csr())
}

/// One value per line.
pub fn write_vector<W: Write>(mut w: W, x: &[f64]) -> Result<(), MmError> {
    let mut buf = String::with_capacity(24 * x.len());
    for v in x {
        writeln!(buf, "{v:e}").expect("string write");
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn read_vector<R: Read>(r: R) -> Result<Vec<f64>, MmError> {
    let mut out = Vec::new();
    for (ln, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        out.push(t.parse().map_err(|_| MmError::Parse {
            line: ln + 1,
            msg: "bad value".into(),
        })?);
    }
    Ok(out)
}
