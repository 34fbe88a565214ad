//! Dense and compressed-sparse-column storage plus the exact factorizations
//! the sketching algorithms run on sketch-sized matrices.

mod factor;
mod sparse;

pub use factor::{
    asymmetry, best_rank_k, numerical_rank, pinv, pseudo_inverse_apply, rank_cutoff, spectral_norm,
    symmetric_eig, thin_qr, thin_svd, thin_svd_full, Side, SvdFactors, SymmetricEig,
};
pub use sparse::CscMatrix;

use nalgebra::DMatrix;

/// Dense column-major matrix of 64-bit floats.
pub type Mat = DMatrix<f64>;

/// A matrix that is either dense or compressed-sparse-by-column.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixHandle {
    Dense(Mat),
    Sparse(CscMatrix),
}

impl From<Mat> for MatrixHandle {
    fn from(m: Mat) -> Self {
        MatrixHandle::Dense(m)
    }
}

impl From<CscMatrix> for MatrixHandle {
    fn from(m: CscMatrix) -> Self {
        MatrixHandle::Sparse(m)
    }
}

impl MatrixHandle {
    pub fn rows(&self) -> usize {
        match self {
            MatrixHandle::Dense(m) => m.nrows(),
            MatrixHandle::Sparse(s) => s.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            MatrixHandle::Dense(m) => m.ncols(),
            MatrixHandle::Sparse(s) => s.cols(),
        }
    }

    /// Stored entries; `rows * cols` for dense storage.
    pub fn nnz(&self) -> usize {
        match self {
            MatrixHandle::Dense(m) => m.len(),
            MatrixHandle::Sparse(s) => s.nnz(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, MatrixHandle::Sparse(_))
    }

    pub fn to_dense(&self) -> Mat {
        match self {
            MatrixHandle::Dense(m) => m.clone(),
            MatrixHandle::Sparse(s) => s.to_dense(),
        }
    }

    pub fn transpose(&self) -> MatrixHandle {
        match self {
            MatrixHandle::Dense(m) => MatrixHandle::Dense(m.transpose()),
            MatrixHandle::Sparse(s) => MatrixHandle::Sparse(s.transpose()),
        }
    }

    pub fn fro_norm_sq(&self) -> f64 {
        match self {
            MatrixHandle::Dense(m) => m.norm_squared(),
            MatrixHandle::Sparse(s) => s.fro_norm_sq(),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        self.fro_norm_sq().sqrt()
    }

    /// Columns `start..start + len` as a new matrix of the same storage kind.
    pub fn column_block(&self, start: usize, len: usize) -> MatrixHandle {
        match self {
            MatrixHandle::Dense(m) => MatrixHandle::Dense(m.columns(start, len).into_owned()),
            MatrixHandle::Sparse(s) => MatrixHandle::Sparse(s.column_block(start, len)),
        }
    }

    /// `self * b`.
    pub fn mul_dense(&self, b: &Mat) -> Mat {
        match self {
            MatrixHandle::Dense(m) => m * b,
            MatrixHandle::Sparse(s) => s.mul_dense(b),
        }
    }

    /// `b * self`.
    pub fn left_mul_dense(&self, b: &Mat) -> Mat {
        match self {
            MatrixHandle::Dense(m) => b * m,
            MatrixHandle::Sparse(s) => s.transpose().mul_dense(&b.transpose()).transpose(),
        }
    }

    /// Column `j` as a dense vector.
    pub fn column_dense(&self, j: usize) -> nalgebra::DVector<f64> {
        match self {
            MatrixHandle::Dense(m) => m.column(j).into_owned(),
            MatrixHandle::Sparse(s) => {
                let mut v = nalgebra::DVector::zeros(s.rows());
                let (idx, vals) = s.col(j);
                for (&i, &x) in idx.iter().zip(vals) {
                    v[i] = x;
                }
                v
            }
        }
    }
}

/// Frobenius norm of `a - c * x * r` computed without forming anything
/// larger than the inputs when `a` is sparse.
pub fn gmr_residual(a: &MatrixHandle, c: &Mat, x: &Mat, r: &Mat) -> f64 {
    let cx = c * x;
    match a {
        MatrixHandle::Dense(a) => (a - &cx * r).norm(),
        MatrixHandle::Sparse(s) => {
            // ||A||^2 - 2<A, CXR> + ||CXR||^2
            let mut cross = 0.0;
            for j in 0..s.cols() {
                let (idx, vals) = s.col(j);
                let rj = r.column(j);
                for (&i, &v) in idx.iter().zip(vals) {
                    cross += v * cx.row(i).transpose().dot(&rj);
                }
            }
            let gram = (cx.transpose() * &cx).component_mul(&(r * r.transpose()));
            let sq = s.fro_norm_sq() - 2.0 * cross + gram.sum();
            sq.max(0.0).sqrt()
        }
    }
}
