use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{CscMatrix, Mat, MatrixHandle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy)]
struct Header {
    format: Format,
    rows: usize,
    cols: usize,
    /// Entry count for coordinate files, `rows * cols` for arrays.
    entries: usize,
}

struct Reader<R> {
    lines: Lines<R>,
    lineno: usize,
}

impl<R: BufRead> Reader<R> {
    /// Next non-comment, non-blank line with its 1-based number.
    fn next_data(&mut self) -> Result<Option<(usize, String)>> {
        for line in self.lines.by_ref() {
            let line = line?;
            self.lineno += 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            return Ok(Some((self.lineno, t.to_string())));
        }
        Ok(None)
    }

    fn header(&mut self) -> Result<Header> {
        let banner = match self.lines.next() {
            Some(l) => l?,
            None => return Err(parse_err(1, "missing %%MatrixMarket banner")),
        };
        self.lineno = 1;
        let fields: Vec<String> = banner.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
        if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
            return Err(parse_err(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
        }
        let format = match fields[2].as_str() {
            "coordinate" => Format::Coordinate,
            "array" => Format::Array,
            other => return Err(parse_err(1, &format!("unknown format {other:?}"))),
        };
        match fields[3].as_str() {
            "real" | "integer" | "double" => {}
            other => return Err(Error::UnsupportedField(other.to_string())),
        }
        if fields[4] != "general" {
            return Err(Error::UnsupportedField(fields[4].clone()));
        }
        let (line, size) = self
            .next_data()?
            .ok_or_else(|| parse_err(self.lineno, "missing size line"))?;
        let nums = parse_usizes(&size, line)?;
        let (rows, cols, entries) = match (format, nums.as_slice()) {
            (Format::Coordinate, [m, n, nnz]) => (*m, *n, *nnz),
            (Format::Array, [m, n]) => (*m, *n, m * n),
            _ => return Err(parse_err(line, "malformed size line")),
        };
        Ok(Header {
            format,
            rows,
            cols,
            entries,
        })
    }

    fn coordinate_entry(&mut self, h: &Header) -> Result<(usize, usize, f64)> {
        let (line, text) = self
            .next_data()?
            .ok_or_else(|| parse_err(self.lineno, "fewer entries than declared"))?;
        let mut it = text.split_whitespace();
        let (Some(i), Some(j), Some(v), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(parse_err(line, "expected 'row col value'"));
        };
        let i: usize = i.parse().map_err(|_| parse_err(line, &format!("bad row index {i:?}")))?;
        let j: usize = j.parse().map_err(|_| parse_err(line, &format!("bad column index {j:?}")))?;
        if i == 0 || j == 0 || i > h.rows || j > h.cols {
            return Err(Error::Index {
                line,
                msg: format!("entry ({i}, {j}) outside {}x{}", h.rows, h.cols),
            });
        }
        Ok((i - 1, j - 1, parse_value(v, line)?))
    }

    fn array_value(&mut self) -> Result<f64> {
        let (line, text) = self
            .next_data()?
            .ok_or_else(|| parse_err(self.lineno, "fewer values than declared"))?;
        parse_value(&text, line)
    }

    fn expect_end(&mut self) -> Result<()> {
        match self.next_data()? {
            Some((line, _)) => Err(parse_err(line, "more entries than declared")),
            None => Ok(()),
        }
    }
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}

fn parse_usizes(text: &str, line: usize) -> Result<Vec<usize>> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(line, &format!("bad size {t:?}"))))
        .collect()
}

fn parse_value(text: &str, line: usize) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| parse_err(line, &format!("bad value {text:?}")))
}

fn open(path: &Path) -> Result<Reader<BufReader<File>>> {
    Ok(Reader {
        lines: BufReader::new(File::open(path)?).lines(),
        lineno: 0,
    })
}

/// Reads a real general Matrix Market file. Coordinate files load as sparse
/// (duplicates summed), array files as dense.
pub fn read_matrix_market(path: &Path) -> Result<MatrixHandle> {
    read_from(open(path)?)
}

fn read_from<R: BufRead>(mut rd: Reader<R>) -> Result<MatrixHandle> {
    let h = rd.header()?;
    let out = match h.format {
        Format::Coordinate => {
            let mut triplets = Vec::with_capacity(h.entries);
            for _ in 0..h.entries {
                triplets.push(rd.coordinate_entry(&h)?);
            }
            MatrixHandle::Sparse(CscMatrix::from_triplets(h.rows, h.cols, &triplets))
        }
        Format::Array => {
            let mut values = Vec::with_capacity(h.entries);
            for _ in 0..h.entries {
                values.push(rd.array_value()?);
            }
            MatrixHandle::Dense(Mat::from_vec(h.rows, h.cols, values))
        }
    };
    rd.expect_end()?;
    Ok(out)
}

/// Writes `a` as Matrix Market: sparse as coordinate, dense as array.
/// Values use the shortest exact decimal form, so reading back is bit-exact.
pub fn write_matrix_market(a: &MatrixHandle, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match a {
        MatrixHandle::Sparse(s) => {
            writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
            writeln!(w, "{} {} {}", s.rows(), s.cols(), s.nnz())?;
            for (i, j, v) in s.triplets() {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
        MatrixHandle::Dense(d) => {
            writeln!(w, "%%MatrixMarket matrix array real general")?;
            writeln!(w, "{} {}", d.nrows(), d.ncols())?;
            for v in d.iter() {
                writeln!(w, "{v:e}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Streams a Matrix Market file as consecutive column blocks without loading
/// it whole. Array files are column-major by definition; coordinate files must
/// list entries with non-decreasing column index. Yields `(offset, block)`.
pub struct MatrixMarketColumns<R> {
    rd: Reader<R>,
    header: Header,
    block_size: usize,
    next_col: usize,
    consumed: usize,
    pending: Option<(usize, usize, f64)>,
    done: bool,
}

impl MatrixMarketColumns<BufReader<File>> {
    pub fn open(path: &Path, block_size: usize) -> Result<Self> {
        Self::new(open(path)?, block_size)
    }
}

impl<R: std::io::Read> MatrixMarketColumns<BufReader<R>> {
    pub fn from_reader(reader: R, block_size: usize) -> Result<Self> {
        Self::new(
            Reader {
                lines: BufReader::new(reader).lines(),
                lineno: 0,
            },
            block_size,
        )
    }
}

impl<R: BufRead> MatrixMarketColumns<R> {
    fn new(mut rd: Reader<R>, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::Config("block size must be at least 1".into()));
        }
        let header = rd.header()?;
        Ok(Self {
            rd,
            header,
            block_size,
            next_col: 0,
            consumed: 0,
            pending: None,
            done: false,
        })
    }

    pub fn rows(&self) -> usize {
        self.header.rows
    }

    pub fn cols(&self) -> usize {
        self.header.cols
    }

    fn next_block(&mut self) -> Result<(usize, MatrixHandle)> {
        let h = self.header;
        let start = self.next_col;
        let width = self.block_size.min(h.cols - start);
        let end = start + width;
        let block = match h.format {
            Format::Array => {
                let mut values = Vec::with_capacity(h.rows * width);
                for _ in 0..h.rows * width {
                    values.push(self.rd.array_value()?);
                }
                self.consumed += h.rows * width;
                MatrixHandle::Dense(Mat::from_vec(h.rows, width, values))
            }
            Format::Coordinate => {
                let mut triplets = Vec::new();
                loop {
                    let entry = match self.pending.take() {
                        Some(e) => e,
                        None if self.consumed < h.entries => {
                            self.consumed += 1;
                            let e = self.rd.coordinate_entry(&h)?;
                            if e.1 < start {
                                return Err(parse_err(
                                    self.rd.lineno,
                                    "coordinate entries must be sorted by column for streaming",
                                ));
                            }
                            e
                        }
                        None => break,
                    };
                    if entry.1 >= end {
                        self.pending = Some(entry);
                        break;
                    }
                    triplets.push((entry.0, entry.1 - start, entry.2));
                }
                MatrixHandle::Sparse(CscMatrix::from_triplets(h.rows, width, &triplets))
            }
        };
        self.next_col = end;
        if end == h.cols {
            self.rd.expect_end()?;
        }
        Ok((start, block))
    }
}

impl<R: BufRead> Iterator for MatrixMarketColumns<R> {
    type Item = Result<(usize, MatrixHandle)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done || self.next_col >= self.header.cols {
            return None;
        }
        let out = self.next_block();
        if out.is_err() {
            self.done = true;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_str(s: &str) -> Result<MatrixHandle> {
        read_from(Reader {
            lines: s.as_bytes().lines(),
            lineno: 0,
        })
    }

    #[test]
    fn array_is_column_major() {
        let a = read_str("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n").unwrap();
        assert_eq!(a.to_dense(), Mat::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 4.0]));
        assert!(!a.is_sparse());
    }

    #[test]
    fn coordinate_duplicates_sum() {
        let a = read_str("%%MatrixMarket matrix coordinate real general\n% c\n2 3 3\n1 2 1.5\n1 2 2\n2 3 -1\n").unwrap();
        assert!(a.is_sparse());
        let d = a.to_dense();
        assert_eq!(d[(0, 1)], 3.5);
        assert_eq!(d[(1, 2)], -1.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn integer_field_accepted() {
        let a = read_str("%%MatrixMarket matrix coordinate integer general\n1 1 1\n1 1 7\n").unwrap();
        assert_eq!(a.to_dense()[(0, 0)], 7.0);
    }

    #[test]
    fn unsupported_fields() {
        for banner in [
            "%%MatrixMarket matrix coordinate complex general",
            "%%MatrixMarket matrix coordinate pattern general",
            "%%MatrixMarket matrix coordinate real symmetric",
        ] {
            let r = read_str(&format!("{banner}\n1 1 0\n"));
            assert!(matches!(r, Err(Error::UnsupportedField(_))), "{banner}");
        }
    }

    #[test]
    fn malformed_inputs_report_lines() {
        let bad = [
            ("garbage\n", 1),
            ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n", 3),
            ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n", 3),
            ("%%MatrixMarket matrix array real general\n1 1\n1\n2\n", 4),
        ];
        for (text, want) in bad {
            match read_str(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(
            read_str("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n"),
            Err(Error::Index { line: 3, .. })
        ));
    }

    #[test]
    fn streaming_blocks() {
        let text = "%%MatrixMarket matrix coordinate real general\n3 5 4\n1 1 1\n2 2 2\n3 4 3\n1 5 4\n";
        let blocks: Vec<_> = MatrixMarketColumns::from_reader(text.as_bytes(), 2)
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(blocks.len(), 3);
        let offsets: Vec<usize> = blocks.iter().map(|b| b.0).collect();
        assert_eq!(offsets, vec![0, 2, 4]);
        assert_eq!(blocks[1].1.to_dense()[(2, 1)], 3.0);
        assert_eq!(blocks[2].1.to_dense()[(0, 0)], 4.0);

        let unsorted = "%%MatrixMarket matrix coordinate real general\n2 4 2\n1 4 1\n1 1 1\n";
        let r: Result<Vec<_>> = MatrixMarketColumns::from_reader(unsorted.as_bytes(), 2).unwrap().collect();
        assert!(r.is_err());
    }
}
