use super::Mat;
use crate::error::{Error, Result};

/// Compressed sparse column matrix.
///
/// Column `j` occupies `col_ptr[j]..col_ptr[j + 1]` of `row_idx` / `values`;
/// row indices within a column are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds a matrix from raw CSC arrays, validating the structure.
    pub fn new(
        rows: usize,
        cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != cols + 1 {
            return Err(Error::InvalidStructure(format!(
                "col_ptr has length {}, expected {}",
                col_ptr.len(),
                cols + 1
            )));
        }
        if col_ptr[0] != 0 || *col_ptr.last().unwrap() != values.len() {
            return Err(Error::InvalidStructure(
                "col_ptr must start at 0 and end at nnz".into(),
            ));
        }
        if row_idx.len() != values.len() {
            return Err(Error::InvalidStructure(
                "row_idx and values differ in length".into(),
            ));
        }
        if let Some(j) = (0..cols).find(|&j| col_ptr[j] > col_ptr[j + 1]) {
            return Err(Error::InvalidStructure(format!(
                "col_ptr decreases at column {j}"
            )));
        }
        for j in 0..cols {
            let idx = &row_idx[col_ptr[j]..col_ptr[j + 1]];
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidStructure(format!(
                    "row indices not strictly increasing in column {j}"
                )));
            }
            if idx.last().is_some_and(|&i| i >= rows) {
                return Err(Error::InvalidStructure(format!(
                    "row index out of range in column {j}"
                )));
            }
        }
        Ok(Self {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            col_ptr: vec![0; cols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(row, col, value)` triplets in any order. Duplicates are
    /// summed. Panics if an index is out of range.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(i, j, _) in &sorted {
            assert!(i < rows && j < cols, "triplet ({i}, {j}) out of range");
        }
        sorted.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Self {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Keeps the exactly-nonzero entries of `m`.
    pub fn from_dense(m: &Mat) -> Self {
        let mut col_ptr = Vec::with_capacity(m.ncols() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != 0.0 {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(values.len());
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    /// Iterates `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.cols).flat_map(move |j| {
            let (idx, vals) = self.col(j);
            idx.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }

    pub fn density(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            0.0
        } else {
            self.nnz() as f64 / (self.rows as f64 * self.cols as f64)
        }
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut counts = vec![0usize; self.rows + 1];
        for &i in &self.row_idx {
            counts[i + 1] += 1;
        }
        for i in 0..self.rows {
            counts[i + 1] += counts[i];
        }
        let col_ptr = counts.clone();
        let mut next = counts;
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // Columns are visited in increasing order, so the new row indices stay sorted.
        for (i, j, v) in self.triplets() {
            let dst = next[i];
            row_idx[dst] = j;
            values[dst] = v;
            next[i] += 1;
        }
        CscMatrix {
            rows: self.cols,
            cols: self.rows,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn column_block(&self, start: usize, len: usize) -> CscMatrix {
        assert!(start + len <= self.cols, "column block out of range");
        let lo = self.col_ptr[start];
        let hi = self.col_ptr[start + len];
        CscMatrix {
            rows: self.rows,
            cols: len,
            col_ptr: self.col_ptr[start..=start + len]
                .iter()
                .map(|p| p - lo)
                .collect(),
            row_idx: self.row_idx[lo..hi].to_vec(),
            values: self.values[lo..hi].to_vec(),
        }
    }

    pub fn fro_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `self * b` for dense `b`.
    pub fn mul_dense(&self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.nrows(), "sparse * dense dimension mismatch");
        let mut out = Mat::zeros(self.rows, b.ncols());
        for k in 0..b.ncols() {
            let mut oc = out.column_mut(k);
            for j in 0..self.cols {
                let bjk = b[(j, k)];
                if bjk == 0.0 {
                    continue;
                }
                let (idx, vals) = self.col(j);
                for (&i, &v) in idx.iter().zip(vals) {
                    oc[i] += v * bjk;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_structure() {
        assert!(CscMatrix::new(2, 1, vec![0, 2], vec![1, 0], vec![1.0, 2.0]).is_err());
        assert!(CscMatrix::new(2, 1, vec![0, 1], vec![2], vec![1.0]).is_err());
        assert!(CscMatrix::new(2, 2, vec![0, 1, 0], vec![0], vec![1.0]).is_err());
        assert!(CscMatrix::new(3, 2, vec![0, 2, 1], vec![0], vec![1.0]).is_err());
        assert!(CscMatrix::new(2, 1, vec![0, 1], vec![1], vec![1.0]).is_ok());
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CscMatrix::from_triplets(3, 2, &[(1, 0, 1.0), (0, 1, 2.0), (1, 0, 0.5)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.to_dense()[(1, 0)], 1.5);
    }

    #[test]
    fn transpose_matches_dense() {
        let m = CscMatrix::from_triplets(3, 4, &[(0, 0, 1.0), (2, 1, -2.0), (1, 3, 4.0), (2, 3, 5.0)]);
        assert_eq!(m.transpose().to_dense(), m.to_dense().transpose());
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn block_and_product() {
        let m = CscMatrix::from_triplets(3, 4, &[(0, 0, 1.0), (2, 1, -2.0), (1, 3, 4.0), (2, 3, 5.0)]);
        let d = m.to_dense();
        assert_eq!(m.column_block(1, 3).to_dense(), d.columns(1, 3).into_owned());
        let b = Mat::from_fn(4, 2, |i, j| (i + 2 * j) as f64);
        assert_eq!(m.mul_dense(&b), &d * &b);
    }
}
