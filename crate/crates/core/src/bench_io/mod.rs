//! Dataset readers and writers, synthetic generators, the sketched residual
//! estimator and experiment result persistence.

mod libsvm;
mod mtx;
mod results;
mod synth;

pub use libsvm::{read_libsvm, write_libsvm, LibsvmData};
pub use mtx::{read_matrix_market, write_matrix_market, MatrixMarketColumns};
pub use results::{aggregate, emit_plotdata, quantile, write_results, write_results_to, PlotPoint, ResultRow, RESULTS_HEADER};
pub use synth::{gaussian_points, synth_lowrank_noise, Decay};

use std::path::{Path, PathBuf};

use crate::error::{dim_mismatch, Result};
use crate::matrix::{Mat, MatrixHandle};
use crate::rng::derive_seed;
use crate::sketch::{SketchOperator, SketchSpec};

/// Estimator accuracy used to size the default count sketches.
pub const DEFAULT_ESTIMATOR_EPSILON: f64 = 0.125;

/// `ceil(25 / eps^2)`: default count-sketch size for the residual estimator.
pub fn default_estimator_size(epsilon: f64) -> usize {
    (25.0 / (epsilon * epsilon)).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageKind {
    Dense,
    Sparse,
}

#[derive(Debug, Clone)]
pub struct DatasetRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub kind: StorageKind,
    pub nnz: usize,
    pub path: Option<PathBuf>,
}

impl DatasetRecord {
    pub fn describe(name: impl Into<String>, a: &MatrixHandle, path: Option<PathBuf>) -> Self {
        Self {
            name: name.into(),
            rows: a.rows(),
            cols: a.cols(),
            kind: if a.is_sparse() { StorageKind::Sparse } else { StorageKind::Dense },
            nnz: a.nnz(),
            path,
        }
    }

    /// `nnz / (rows * cols)`.
    pub fn density(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        self.nnz as f64 / (self.rows as f64 * self.cols as f64)
    }
}

/// Loads a matrix by extension: `.mtx` is Matrix Market, anything else is
/// read as libsvm with samples as columns.
pub fn load_dataset(path: &Path) -> Result<(MatrixHandle, DatasetRecord)> {
    let a = if path.extension().is_some_and(|e| e == "mtx") {
        read_matrix_market(path)?
    } else {
        MatrixHandle::Sparse(read_libsvm(path)?.features)
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let rec = DatasetRecord::describe(name, &a, Some(path.to_path_buf()));
    Ok((a, rec))
}

/// `||S1 (A - C X R) S2^T||_F` with independent count sketches of sizes `s1`
/// and `s2`, derived from `seed`.
pub fn estimate_fro_residual(
    a: &MatrixHandle,
    c: &Mat,
    x: &Mat,
    r: &Mat,
    s1: usize,
    s2: usize,
    seed: u64,
) -> Result<f64> {
    let left = SketchOperator::realize(&SketchSpec::count_sketch(s1, a.rows(), derive_seed(seed, 1)))?;
    let right = SketchOperator::realize(&SketchSpec::count_sketch(s2, a.cols(), derive_seed(seed, 2)))?;
    estimate_fro_residual_with(a, c, x, r, &left, &right)
}

/// Residual estimate with given operators. `A - C X R` is never formed; the
/// three factors are sketched separately.
pub fn estimate_fro_residual_with(
    a: &MatrixHandle,
    c: &Mat,
    x: &Mat,
    r: &Mat,
    s1: &SketchOperator,
    s2: &SketchOperator,
) -> Result<f64> {
    let (m, n) = (a.rows(), a.cols());
    if c.nrows() != m || r.ncols() != n || x.nrows() != c.ncols() || x.ncols() != r.nrows() {
        return Err(dim_mismatch(
            "estimate_fro_residual",
            format!("C {m}x{}, X {}x{}, R {}x{n}", x.nrows(), c.ncols(), r.nrows(), x.ncols()),
            format!("C {:?}, X {:?}, R {:?}", c.shape(), x.shape(), r.shape()),
        ));
    }
    if s1.source_dim() != m || s2.source_dim() != n {
        return Err(dim_mismatch(
            "estimate_fro_residual",
            format!("sketches over {m} and {n}"),
            format!("{} and {}", s1.source_dim(), s2.source_dim()),
        ));
    }
    let sas = s2.apply_right_dense(&s1.apply_left(a)?);
    let s1c = s1.apply_left_dense(c);
    let rs2 = s2.apply_right_dense(r);
    Ok((sas - s1c * x * rs2).norm())
}

/// Splits `a` into consecutive column blocks of width `block_size` (the last
/// one may be shorter), paired with their column offsets.
pub fn column_blocks(a: &MatrixHandle, block_size: usize) -> impl Iterator<Item = (usize, MatrixHandle)> + '_ {
    let step = block_size.max(1);
    (0..a.cols())
        .step_by(step)
        .map(move |start| (start, a.column_block(start, step.min(a.cols() - start))))
}
