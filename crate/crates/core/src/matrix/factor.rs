use nalgebra::linalg::{SymmetricEigen, SVD};
use nalgebra::DVector;

use super::Mat;
use crate::error::{dim_mismatch, Error, Result};

const SVD_MAX_ITER: usize = 10_000;
const SVD_CHECK_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Thin SVD with singular values sorted nonincreasing and truncated at the
/// numerical rank.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// `rows x rank`, orthonormal columns.
    pub u: Mat,
    pub singular_values: Vec<f64>,
    /// `cols x rank`, orthonormal columns.
    pub v: Mat,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> Mat {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues nonincreasing.
#[derive(Debug, Clone)]
pub struct SymmetricEig {
    pub vectors: Mat,
    pub values: Vec<f64>,
}

impl SymmetricEig {
    pub fn reconstruct(&self) -> Mat {
        let mut vd = self.vectors.clone();
        for (j, d) in self.values.iter().enumerate() {
            vd.column_mut(j).scale_mut(*d);
        }
        vd * self.vectors.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `A^+ B`
    Left,
    /// `B A^+`
    Right,
}

/// Singular values at or below this are treated as zero:
/// `max(rows, cols) * sigma_1 * eps`.
pub fn rank_cutoff(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * sigma_max * f64::EPSILON
}

/// Economy QR: `a = q * t` with `q` of size `rows x min(rows, cols)`.
pub fn thin_qr(a: &Mat) -> (Mat, Mat) {
    if a.is_empty() {
        let k = a.nrows().min(a.ncols());
        return (Mat::zeros(a.nrows(), k), Mat::zeros(k, a.ncols()));
    }
    let qr = a.clone().qr();
    (qr.q(), qr.r())
}

pub fn thin_svd(a: &Mat) -> Result<SvdFactors> {
    svd_impl(a, true)
}

/// Thin SVD keeping all `min(m, n)` triplets, including zero singular values.
pub fn thin_svd_full(a: &Mat) -> Result<SvdFactors> {
    svd_impl(a, false)
}

/// `(U, sigma, V^T)` with all `min(m, n)` triplets, unsorted.
///
/// nalgebra's bidiagonal QR iteration occasionally returns a wrong
/// factorization for rank-deficient inputs, so its result is verified
/// (reconstruction and orthonormality) and replaced by a QR-preconditioned
/// one-sided Jacobi SVD when the check fails.
fn checked_svd(a: &Mat) -> Result<(Mat, DVector<f64>, Mat)> {
    if let Some(svd) = SVD::try_new(a.clone(), true, true, 5.0 * f64::EPSILON, SVD_MAX_ITER) {
        if let (Some(u), Some(vt)) = (svd.u, svd.v_t) {
            if svd_is_valid(a, &u, &svd.singular_values, &vt) {
                return Ok((u, svd.singular_values, vt));
            }
        }
    }
    let (u, s, vt) = jacobi_svd(a)?;
    if svd_is_valid(a, &u, &s, &vt) {
        Ok((u, s, vt))
    } else {
        Err(Error::IterationFailure)
    }
}

fn svd_is_valid(a: &Mat, u: &Mat, s: &DVector<f64>, vt: &Mat) -> bool {
    if s.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return false;
    }
    let mut us = u.clone();
    for (j, sj) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(*sj);
    }
    let k = s.len();
    let recon = (us * vt - a).norm() <= SVD_CHECK_TOL * a.norm().max(f64::MIN_POSITIVE);
    let eye = Mat::identity(k, k);
    recon
        && (u.transpose() * u - &eye).norm() <= SVD_CHECK_TOL * (k as f64).sqrt().max(1.0)
        && (vt * vt.transpose() - &eye).norm() <= SVD_CHECK_TOL * (k as f64).sqrt().max(1.0)
}

/// One-sided (Hestenes) Jacobi on the triangular factor of a Householder QR.
fn jacobi_svd(a: &Mat) -> Result<(Mat, DVector<f64>, Mat)> {
    if a.nrows() < a.ncols() {
        let (u, s, vt) = jacobi_svd(&a.transpose())?;
        return Ok((vt.transpose(), s, u.transpose()));
    }
    let n = a.ncols();
    let (q, mut w) = thin_qr(a);
    let mut v = Mat::identity(n, n);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for r in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(r).norm_squared();
                let gamma = w.column(p).dot(&w.column(r));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, r, c, s);
                rotate_columns(&mut v, p, r, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::IterationFailure);
    }
    let sigma = DVector::from_iterator(n, (0..n).map(|j| w.column(j).norm()));
    let mut ur = Mat::zeros(n, n);
    let mut filled = vec![false; n];
    for j in 0..n {
        if sigma[j] > 0.0 {
            ur.set_column(j, &(w.column(j) / sigma[j]));
            filled[j] = true;
        }
    }
    complete_orthonormal(&mut ur, &mut filled);
    Ok((q * ur, sigma, v.transpose()))
}

fn rotate_columns(m: &mut Mat, p: usize, r: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (x, y) = (m[(i, p)], m[(i, r)]);
        m[(i, p)] = c * x - s * y;
        m[(i, r)] = s * x + c * y;
    }
}

/// Fills the unset columns of a square matrix with unit vectors orthogonal to
/// the set ones (Gram-Schmidt over the standard basis).
fn complete_orthonormal(u: &mut Mat, filled: &mut [bool]) {
    let n = u.nrows();
    let mut candidate = 0;
    for j in 0..filled.len() {
        if filled[j] {
            continue;
        }
        while candidate < n {
            let mut x = DVector::zeros(n);
            x[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for k in (0..filled.len()).filter(|&k| filled[k]) {
                    let d = u.column(k).dot(&x);
                    x -= u.column(k) * d;
                }
            }
            let nrm = x.norm();
            if nrm > 0.5 {
                u.set_column(j, &(x / nrm));
                filled[j] = true;
                break;
            }
        }
    }
}

fn svd_impl(a: &Mat, truncate: bool) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(SvdFactors {
            u: Mat::zeros(m, 0),
            singular_values: Vec::new(),
            v: Mat::zeros(n, 0),
        });
    }
    let (u, sv, vt) = checked_svd(a)?;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let smax = order.first().map_or(0.0, |&i| sv[i]);
    let tol = rank_cutoff(m, n, smax);
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| !truncate || (sv[i] > tol && sv[i] > 0.0))
        .collect();

    let mut uu = Mat::zeros(m, kept.len());
    let mut vv = Mat::zeros(n, kept.len());
    for (dst, &src) in kept.iter().enumerate() {
        uu.set_column(dst, &u.column(src));
        vv.set_column(dst, &vt.row(src).transpose());
    }
    Ok(SvdFactors {
        u: uu,
        singular_values: kept.iter().map(|&i| sv[i]).collect(),
        v: vv,
    })
}

/// Number of singular values above the cutoff.
pub fn numerical_rank(a: &Mat) -> Result<usize> {
    Ok(thin_svd(a)?.rank())
}

pub fn spectral_norm(a: &Mat) -> Result<f64> {
    Ok(thin_svd(a)?.singular_values.first().copied().unwrap_or(0.0))
}

/// Moore-Penrose pseudoinverse.
pub fn pinv(a: &Mat) -> Result<Mat> {
    let f = thin_svd(a)?;
    let mut v = f.v;
    for (j, s) in f.singular_values.iter().enumerate() {
        v.column_mut(j).scale_mut(1.0 / s);
    }
    Ok(v * f.u.transpose())
}

/// `A^+ B` (left) or `B A^+` (right).
pub fn pseudo_inverse_apply(a: &Mat, b: &Mat, side: Side) -> Result<Mat> {
    match side {
        Side::Left if a.nrows() != b.nrows() => {
            return Err(dim_mismatch(
                "pseudo_inverse_apply",
                format!("B with {} rows", a.nrows()),
                format!("{} rows", b.nrows()),
            ))
        }
        Side::Right if a.ncols() != b.ncols() => {
            return Err(dim_mismatch(
                "pseudo_inverse_apply",
                format!("B with {} cols", a.ncols()),
                format!("{} cols", b.ncols()),
            ))
        }
        _ => {}
    }
    let f = thin_svd(a)?;
    let inv_s: Vec<f64> = f.singular_values.iter().map(|s| 1.0 / s).collect();
    Ok(match side {
        Side::Left => {
            let mut t = f.u.transpose() * b;
            for (i, s) in inv_s.iter().enumerate() {
                t.row_mut(i).scale_mut(*s);
            }
            f.v * t
        }
        Side::Right => {
            let mut t = b * f.v;
            for (j, s) in inv_s.iter().enumerate() {
                t.column_mut(j).scale_mut(*s);
            }
            t * f.u.transpose()
        }
    })
}

/// Best rank-`k` approximation in Frobenius norm.
pub fn best_rank_k(a: &Mat, k: usize) -> Result<Mat> {
    let mut f = thin_svd(a)?;
    let keep = k.min(f.rank());
    f.u = f.u.columns(0, keep).into_owned();
    f.v = f.v.columns(0, keep).into_owned();
    f.singular_values.truncate(keep);
    Ok(f.reconstruct())
}

/// Largest `|a_ij - a_ji|`.
pub fn asymmetry(a: &Mat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetric eigendecomposition. Rejects inputs whose asymmetry exceeds
/// `1e-10 * max(1, max|a_ij|)`.
pub fn symmetric_eig(a: &Mat) -> Result<SymmetricEig> {
    let (m, n) = a.shape();
    if m != n {
        return Err(Error::NotSquare { rows: m, cols: n });
    }
    if n == 0 {
        return Ok(SymmetricEig {
            vectors: Mat::zeros(0, 0),
            values: Vec::new(),
        });
    }
    let asym = asymmetry(a);
    if asym > 1e-10 * a.amax().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let sym = (a + a.transpose()) * 0.5;
    let scale = sym.norm().max(f64::MIN_POSITIVE);
    let eig = [1.0, 5.0, 50.0]
        .into_iter()
        .filter_map(|f| SymmetricEigen::try_new(sym.clone(), f * f64::EPSILON, SVD_MAX_ITER))
        .find(|e| (e.recompose() - &sym).norm() <= SVD_CHECK_TOL * scale)
        .ok_or(Error::IterationFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SymmetricEig {
        vectors,
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
    })
}
