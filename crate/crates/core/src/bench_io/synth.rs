use crate::matrix::{thin_qr, Mat, MatrixHandle};
use crate::rng::{derive_seed, gaussian_matrix, substream, STREAM_AUX};

/// Spectrum of the planted low-rank part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decay {
    /// All `k` singular values equal to one.
    None,
    /// `sigma_i = 1 / i^2`.
    Poly,
}

/// `U_k diag(sigma) V_k^T + noise * G / sqrt(m n)` with Haar-like orthonormal
/// `U_k`, `V_k` and standard Gaussian `G`. Deterministic in all arguments.
///
/// Panics if `k > min(m, n)`.
pub fn synth_lowrank_noise(m: usize, n: usize, k: usize, noise: f64, decay: Decay, seed: u64) -> MatrixHandle {
    assert!(k <= m.min(n), "rank {k} exceeds min({m}, {n})");
    let mut a = if k == 0 {
        Mat::zeros(m, n)
    } else {
        let u = thin_qr(&gaussian_matrix(m, k, &mut substream(derive_seed(seed, 1), STREAM_AUX))).0;
        let v = thin_qr(&gaussian_matrix(n, k, &mut substream(derive_seed(seed, 2), STREAM_AUX))).0;
        let scaled = Mat::from_fn(m, k, |i, j| {
            let s = match decay {
                Decay::None => 1.0,
                Decay::Poly => 1.0 / ((j + 1) * (j + 1)) as f64,
            };
            u[(i, j)] * s
        });
        scaled * v.transpose()
    };
    if noise != 0.0 && m * n > 0 {
        let g = gaussian_matrix(m, n, &mut substream(derive_seed(seed, 3), STREAM_AUX));
        a += g * (noise / ((m * n) as f64).sqrt());
    }
    MatrixHandle::Dense(a)
}

/// `d x n` cloud of points drawn around `clusters` Gaussian centers with
/// unit spread; columns are points. Used as input to RBF kernels.
pub fn gaussian_points(d: usize, n: usize, clusters: usize, spread: f64, seed: u64) -> Mat {
    let clusters = clusters.max(1);
    let centers = gaussian_matrix(d, clusters, &mut substream(derive_seed(seed, 4), STREAM_AUX));
    let g = gaussian_matrix(d, n, &mut substream(derive_seed(seed, 5), STREAM_AUX));
    Mat::from_fn(d, n, |i, j| centers[(i, j % clusters)] + spread * g[(i, j)])
}
