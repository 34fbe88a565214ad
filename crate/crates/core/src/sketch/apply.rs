use super::{Realized, SketchOperator};
use crate::matrix::{CscMatrix, Mat};

/// In-place unnormalized Walsh-Hadamard transform; `buf.len()` is a power of two.
pub(crate) fn fwht(buf: &mut [f64]) {
    let n = buf.len();
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (x, y) = (buf[i], buf[i + h]);
                buf[i] = x + y;
                buf[i + h] = x - y;
            }
        }
        h *= 2;
    }
}

impl SketchOperator {
    pub(super) fn left_dense(&self, a: &Mat) -> (Mat, usize) {
        let s = self.sketch_rows();
        let n = a.ncols();
        match &self.realized {
            Realized::Identity => (a.clone(), a.len()),
            Realized::Sampling { indices, scales } => {
                let mut out = Mat::zeros(s, n);
                for (t, (&i, &sc)) in indices.iter().zip(scales).enumerate() {
                    for j in 0..n {
                        out[(t, j)] = sc * a[(i, j)];
                    }
                }
                (out, s * n)
            }
            Realized::Gaussian(g) => (g * a, g.len() * n),
            Realized::Srht { padded, signs, rows } => {
                let scale = 1.0 / (s as f64).sqrt();
                let mut out = Mat::zeros(s, n);
                let mut buf = vec![0.0; *padded];
                for j in 0..n {
                    buf.iter_mut().for_each(|x| *x = 0.0);
                    for (i, x) in a.column(j).iter().enumerate() {
                        buf[i] = signs[i] * x;
                    }
                    fwht(&mut buf);
                    for (t, &r) in rows.iter().enumerate() {
                        out[(t, j)] = scale * buf[r];
                    }
                }
                let log = padded.trailing_zeros() as usize;
                (out, n * padded * log.max(1))
            }
            Realized::Hashing { per_col, rows, values } => {
                let mut out = Mat::zeros(s, n);
                for j in 0..n {
                    let mut oc = out.column_mut(j);
                    for (i, &x) in a.column(j).iter().enumerate() {
                        let r = i * per_col..(i + 1) * per_col;
                        for (&row, &v) in rows[r.clone()].iter().zip(&values[r]) {
                            oc[row] += v * x;
                        }
                    }
                }
                (out, a.len() * per_col)
            }
            Realized::Composed { inner, outer } => {
                let (mid, w1) = inner.left_dense(a);
                let (res, w2) = outer.left_dense(&mid);
                (res, w1 + w2)
            }
        }
    }

    pub(super) fn left_sparse(&self, a: &CscMatrix) -> (Mat, usize) {
        let s = self.sketch_rows();
        let n = a.cols();
        match &self.realized {
            Realized::Identity => (a.to_dense(), a.nnz()),
            Realized::Sampling { indices, scales } => {
                // source row -> sketch rows that picked it
                let mut picks: Vec<Vec<usize>> = vec![Vec::new(); a.rows()];
                for (t, &i) in indices.iter().enumerate() {
                    picks[i].push(t);
                }
                let mut out = Mat::zeros(s, n);
                let mut work = 0;
                for (i, j, x) in a.triplets() {
                    for &t in &picks[i] {
                        out[(t, j)] = scales[t] * x;
                        work += 1;
                    }
                }
                (out, work)
            }
            Realized::Gaussian(g) => {
                let mut out = Mat::zeros(s, n);
                for (i, j, x) in a.triplets() {
                    out.column_mut(j).axpy(x, &g.column(i), 1.0);
                }
                (out, a.nnz() * s)
            }
            Realized::Srht { .. } => self.left_dense(&a.to_dense()),
            Realized::Hashing { per_col, rows, values } => {
                let mut out = Mat::zeros(s, n);
                for (i, j, x) in a.triplets() {
                    let r = i * per_col..(i + 1) * per_col;
                    for (&row, &v) in rows[r.clone()].iter().zip(&values[r]) {
                        out[(row, j)] += v * x;
                    }
                }
                (out, a.nnz() * per_col)
            }
            Realized::Composed { inner, outer } => {
                let (mid, w1) = inner.left_sparse(a);
                let (res, w2) = outer.left_dense(&mid);
                (res, w1 + w2)
            }
        }
    }
}
