//! Reference implementations used as test oracles. They share no code with
//! the library's factorizations (which are backed by nalgebra's QR/SVD/eig).
#![allow(dead_code)]

use fastgmr::matrix::{CscMatrix, Mat, MatrixHandle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0F_7E57)
}

/// Entries uniform in [-1, 1).
pub fn uniform(m: usize, n: usize, rng: &mut impl Rng) -> Mat {
    Mat::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
}

/// `m x n` matrix of exact rank `rank` (product of two uniform factors).
pub fn low_rank(m: usize, n: usize, rank: usize, rng: &mut impl Rng) -> Mat {
    uniform(m, rank, rng) * uniform(rank, n, rng)
}

/// Random sparse matrix with roughly `density * m * n` uniform entries.
pub fn sparse(m: usize, n: usize, density: f64, rng: &mut impl Rng) -> CscMatrix {
    let mut t = Vec::new();
    for j in 0..n {
        for i in 0..m {
            if rng.random::<f64>() < density {
                t.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    CscMatrix::from_triplets(m, n, &t)
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Columns that
/// fall below `1e-12` of their original norm are dropped, so the result is
/// an orthonormal basis of the range.
pub fn mgs_basis(a: &Mat) -> Mat {
    let mut q: Vec<Vec<f64>> = Vec::new();
    let scale = (0..a.ncols()).map(|j| a.column(j).norm()).fold(0.0, f64::max);
    for j in 0..a.ncols() {
        let mut v: Vec<f64> = a.column(j).iter().copied().collect();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= d * y);
            }
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-10 * scale.max(f64::MIN_POSITIVE) {
            q.push(v.into_iter().map(|x| x / nrm).collect());
        }
    }
    let mut out = Mat::zeros(a.nrows(), q.len());
    for (j, u) in q.iter().enumerate() {
        out.column_mut(j).copy_from_slice(u);
    }
    out
}

/// `Q Q^T` for an orthonormal `Q`.
pub fn projector(q: &Mat) -> Mat {
    q * q.transpose()
}

/// One-sided Jacobi SVD: returns `(U, sigma, V)` with `A = U diag(sigma) V^T`,
/// sigma sorted descending, all `min(m, n)` triplets (requires `m >= n`;
/// transposes internally otherwise).
pub fn jacobi_svd(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    if a.nrows() < a.ncols() {
        let (u, s, v) = jacobi_svd(&a.transpose());
        return (v, s, u);
    }
    let n = a.ncols();
    let mut w = a.clone();
    let mut v = Mat::identity(n, n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..w.nrows() {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = Mat::zeros(a.nrows(), n);
    let mut vv = Mat::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let nrm = norms[src];
        s.push(nrm);
        if nrm > 0.0 {
            u.set_column(dst, &(w.column(src) / nrm));
        }
        vv.set_column(dst, &v.column(src));
    }
    (u, s, vv)
}

/// Pseudoinverse from the Jacobi SVD with relative cutoff `1e-10`.
pub fn oracle_pinv(a: &Mat) -> Mat {
    let (u, s, v) = jacobi_svd(a);
    let smax = s.first().copied().unwrap_or(0.0);
    let mut out = Mat::zeros(a.ncols(), a.nrows());
    for (j, &sj) in s.iter().enumerate() {
        if sj > 1e-10 * smax {
            out += v.column(j) * u.column(j).transpose() / sj;
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi rotations.
pub fn jacobi_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.nrows();
    let mut m = (a + a.transpose()) * 0.5;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off <= 1e-30 * m.norm_squared().max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)] == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (x, y) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * x - s * y;
                    m[(k, q)] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * x - s * y;
                    m[(q, k)] = s * x + c * y;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Solves `min ||A x - b||` for full-column-rank `A` via the normal equations
/// and Gaussian elimination with partial pivoting.
pub fn normal_equations(a: &Mat, b: &Mat) -> Mat {
    let mut g = a.transpose() * a;
    let mut rhs = a.transpose() * b;
    let n = g.nrows();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| g[(i, col)].abs().total_cmp(&g[(j, col)].abs())).unwrap();
        g.swap_rows(col, piv);
        rhs.swap_rows(col, piv);
        for row in col + 1..n {
            let f = g[(row, col)] / g[(col, col)];
            for k in col..n {
                g[(row, k)] -= f * g[(col, k)];
            }
            for k in 0..rhs.ncols() {
                rhs[(row, k)] -= f * rhs[(col, k)];
            }
        }
    }
    let mut x = Mat::zeros(n, rhs.ncols());
    for k in 0..rhs.ncols() {
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|j| g[(row, j)] * x[(j, k)]).sum();
            x[(row, k)] = (rhs[(row, k)] - s) / g[(row, row)];
        }
    }
    x
}

/// Dense `S` rebuilt from an operator's per-column hash tables.
pub fn hashing_replay(op: &fastgmr::sketch::SketchOperator) -> Mat {
    let mut s = Mat::zeros(op.sketch_rows(), op.source_dim());
    for j in 0..op.source_dim() {
        let (rows, vals) = op.column_entries(j).expect("hashing operator");
        for (r, v) in rows.iter().zip(vals) {
            s[(*r, j)] += v;
        }
    }
    s
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

pub fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn dense(a: &MatrixHandle) -> Mat {
    a.to_dense()
}
