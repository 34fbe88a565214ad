use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::CscMatrix;

#[derive(Debug, Clone)]
pub struct LibsvmData {
    /// `d x n`, one sample per column.
    pub features: CscMatrix,
    pub labels: Vec<f64>,
}

/// Reads a libsvm file (`label idx:val ...`, 1-based indices). Blank lines
/// and `#` comments are skipped; `qid:` tokens are ignored.
pub fn read_libsvm(path: &Path) -> Result<LibsvmData> {
    parse_libsvm(BufReader::new(File::open(path)?))
}

/// Writes samples (columns of `features`) as libsvm lines with 1-based
/// indices; values use the shortest exact decimal form.
pub fn write_libsvm(features: &CscMatrix, labels: &[f64], path: &Path) -> Result<()> {
    if labels.len() != features.cols() {
        return Err(crate::error::dim_mismatch("write_libsvm", features.cols(), labels.len()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    for (j, label) in labels.iter().enumerate() {
        write!(w, "{label}")?;
        let (rows, vals) = features.col(j);
        for (i, v) in rows.iter().zip(vals) {
            write!(w, " {}:{v:e}", i + 1)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn parse_libsvm(reader: impl BufRead) -> Result<LibsvmData> {
    let mut labels = Vec::new();
    let mut triplets = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad label {label_tok:?}"),
        })?;
        let col = labels.len();
        labels.push(label);
        for tok in tokens {
            if tok.starts_with("qid:") {
                continue;
            }
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("expected idx:val, got {tok:?}"),
            })?;
            let idx: i64 = idx.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad index {idx:?}"),
            })?;
            if idx <= 0 {
                return Err(Error::Index {
                    line: lineno,
                    msg: format!("indices are 1-based, got {idx}"),
                });
            }
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad value {val:?}"),
            })?;
            let row = idx as usize - 1;
            dim = dim.max(row + 1);
            triplets.push((row, col, val));
        }
    }
    Ok(LibsvmData {
        features: CscMatrix::from_triplets(dim, labels.len(), &triplets),
        labels,
    })
}
