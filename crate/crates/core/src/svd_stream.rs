//! Single-pass SVD over a stream of column blocks.
//!
//! The fast variant keeps three sketches of the input: a column-space sketch
//! `C = A Omega~` (`m x c`), a row-space sketch `R = Psi~ A` (`r x n`) and a
//! small two-sided sketch `M = S_C A S_R^T`. After the pass it solves a
//! sketched GMR problem for the core between the orthonormal bases of `C` and
//! `R^T`. `Psi~ = G_R Psi` and `Omega~^T = G_C Omega` compose an OSNAP
//! embedding with a Gaussian compression.
//!
//! The practical variant uses Gaussian `Psi~`, `Omega~` and recovers the core
//! from `R` alone: `N = (Psi~ U_C)^+ R V_R`.
//!
//! Each column is folded into the accumulators on its own and in the same
//! order whatever the block size, so the result does not depend on how the
//! stream is chunked.

use std::path::Path;

use nalgebra::DVector;

use crate::bench_io::column_blocks;
use crate::error::{dim_mismatch, Error, Result};
use crate::gmr::sketched_core;
use crate::matrix::{numerical_rank, pinv, spectral_norm, thin_qr, thin_svd, thin_svd_full, Mat, MatrixHandle, Side};
use crate::rng::derive_seed;
use crate::sketch::{SketchOperator, SketchSpec};

/// Nonzeros per column of the OSNAP operators unless configured otherwise.
pub const DEFAULT_OSNAP_NNZ: usize = 2;

const CHECKPOINT_MAGIC: &[u8; 16] = b"FASTGMR_SPSVD_CK";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSvdConfig {
    pub k: usize,
    pub epsilon: f64,
    /// OSNAP rows of `Omega` (column side).
    pub c0: usize,
    /// OSNAP rows of `Psi` (row side).
    pub r0: usize,
    /// Columns of `C`.
    pub c: usize,
    /// Rows of `R`.
    pub r: usize,
    pub s_c: usize,
    pub s_r: usize,
    pub block_size: usize,
    pub seed: u64,
    pub osnap_p: usize,
}

impl StreamSvdConfig {
    /// Sizes from `k` and `epsilon` with unit constants: `c = r = ceil(k/eps)`,
    /// `c0 = r0 = ceil((k/eps)^1.5)` and `s_c = s_r = ceil(k/eps^1.5) + c0`.
    pub fn suggested(k: usize, epsilon: f64, seed: u64) -> Self {
        let base = k as f64 / epsilon;
        let c = base.ceil() as usize;
        let c0 = base.powf(1.5).ceil() as usize;
        let s = (k as f64 / epsilon.powf(1.5)).ceil() as usize + c0;
        Self {
            k,
            epsilon,
            c0,
            r0: c0,
            c,
            r: c,
            s_c: s,
            s_r: s,
            block_size: 1,
            seed,
            osnap_p: DEFAULT_OSNAP_NNZ,
        }
    }

    /// Checks the size relations. The core sketch sizes only matter for the
    /// fast variant.
    pub fn validate(&self, variant: Variant) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.k == 0 {
            return bad("target rank must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.c < self.k || self.r < self.k {
            return bad(format!("need c, r >= k (c = {}, r = {}, k = {})", self.c, self.r, self.k));
        }
        if self.block_size == 0 {
            return bad("block size must be at least 1".into());
        }
        if variant == Variant::Fast {
            if self.s_c < self.c || self.s_r < self.r {
                return bad(format!(
                    "need s_c >= c and s_r >= r (s_c = {}, s_r = {})",
                    self.s_c, self.s_r
                ));
            }
            if self.c0 < self.c || self.r0 < self.r {
                return bad(format!("need c0 >= c and r0 >= r (c0 = {}, r0 = {})", self.c0, self.r0));
            }
            if self.osnap_p == 0 || self.osnap_p > self.c0.min(self.r0).min(self.s_c).min(self.s_r) {
                return bad(format!("OSNAP nonzeros per column {} out of range", self.osnap_p));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Fast,
    Practical,
}

#[derive(Debug, Clone)]
pub struct LowRankFactors {
    /// `m x q`, orthonormal columns.
    pub u: Mat,
    /// Nonincreasing, length `q`.
    pub sigma: Vec<f64>,
    /// `n x q`, orthonormal columns.
    pub v: Mat,
}

impl LowRankFactors {
    pub fn reconstruct(&self) -> Mat {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    /// `||A - U Sigma V^T||_F`.
    pub fn residual_fro(&self, a: &Mat) -> f64 {
        (a - self.reconstruct()).norm()
    }
}

/// Intermediate quantities of [`StreamSvdState::finalize_detailed`].
#[derive(Debug, Clone)]
pub struct FinalizeParts {
    pub u_c: Mat,
    pub v_r: Mat,
    /// Core between `U_C` and `V_R^T`.
    pub n: Mat,
    pub factors: LowRankFactors,
}

#[derive(Debug, Clone)]
pub struct StreamSvdState {
    config: StreamSvdConfig,
    variant: Variant,
    m: usize,
    n: usize,
    /// `Psi~`, `r x m`.
    psi: Mat,
    /// `Omega~^T`, `c x n`.
    omega_t: Mat,
    s_c: Option<SketchOperator>,
    s_r: Option<SketchOperator>,
    c_acc: Mat,
    r_acc: Mat,
    m_acc: Mat,
    seen: usize,
}

impl StreamSvdState {
    /// Fast single-pass SVD state for an `m x n` stream.
    pub fn new(config: StreamSvdConfig, m: usize, n: usize) -> Result<Self> {
        Self::with_variant(config, m, n, Variant::Fast)
    }

    /// Practical single-pass SVD state; `c0`, `r0`, `s_c`, `s_r` are unused.
    pub fn practical(config: StreamSvdConfig, m: usize, n: usize) -> Result<Self> {
        Self::with_variant(config, m, n, Variant::Practical)
    }

    pub fn with_variant(config: StreamSvdConfig, m: usize, n: usize, variant: Variant) -> Result<Self> {
        config.validate(variant)?;
        let cf = &config;
        let seed = |label| derive_seed(cf.seed, label);
        let (psi, omega_t, s_c, s_r, m_acc) = match variant {
            Variant::Fast => {
                let psi = SketchOperator::realize(&SketchSpec::osnap_gaussian(cf.r, cf.r0, m, cf.osnap_p, seed(21)))?;
                let omega =
                    SketchOperator::realize(&SketchSpec::osnap_gaussian(cf.c, cf.c0, n, cf.osnap_p, seed(22)))?;
                let s_c = SketchOperator::realize(&SketchSpec::osnap(cf.s_c, m, cf.osnap_p, seed(23)))?;
                let s_r = SketchOperator::realize(&SketchSpec::osnap(cf.s_r, n, cf.osnap_p, seed(24)))?;
                (
                    psi.to_dense(),
                    omega.to_dense(),
                    Some(s_c),
                    Some(s_r),
                    Mat::zeros(cf.s_c, cf.s_r),
                )
            }
            Variant::Practical => {
                let psi = SketchOperator::realize(&SketchSpec::gaussian(cf.r, m, seed(21)))?;
                let omega = SketchOperator::realize(&SketchSpec::gaussian(cf.c, n, seed(22)))?;
                (psi.to_dense(), omega.to_dense(), None, None, Mat::zeros(0, 0))
            }
        };
        Ok(Self {
            c_acc: Mat::zeros(m, cf.c),
            r_acc: Mat::zeros(cf.r, n),
            config,
            variant,
            m,
            n,
            psi,
            omega_t,
            s_c,
            s_r,
            m_acc,
            seen: 0,
        })
    }

    pub fn config(&self) -> &StreamSvdConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn columns_seen(&self) -> usize {
        self.seen
    }

    /// `(Psi~, Omega~^T)`.
    pub fn range_sketches(&self) -> (&Mat, &Mat) {
        (&self.psi, &self.omega_t)
    }

    /// `(S_C, S_R)` of the fast variant.
    pub fn core_sketches(&self) -> Option<(&SketchOperator, &SketchOperator)> {
        Some((self.s_c.as_ref()?, self.s_r.as_ref()?))
    }

    /// `C = A[:, 0:t] Omega~[0:t, :]`.
    pub fn c_accumulator(&self) -> &Mat {
        &self.c_acc
    }

    /// `R = Psi~ A[:, 0:t]`.
    pub fn r_accumulator(&self) -> Mat {
        self.r_acc.columns(0, self.seen).into_owned()
    }

    /// `M = S_C A[:, 0:t] S_R^T[0:t, :]` (empty for the practical variant).
    pub fn m_accumulator(&self) -> &Mat {
        &self.m_acc
    }

    /// Floats held by the state: operators, accumulators and sketch tables.
    pub fn state_floats(&self) -> usize {
        let ops = self.s_c.as_ref().map_or(0, |s| s.nnz()) + self.s_r.as_ref().map_or(0, |s| s.nnz());
        self.psi.len() + self.omega_t.len() + ops + self.c_acc.len() + self.r_acc.len() + self.m_acc.len()
    }

    /// Folds the columns `[col_offset, col_offset + block.cols())` into the
    /// accumulators. Blocks must arrive in order without gaps or overlaps.
    pub fn ingest_block(&mut self, block: &MatrixHandle, col_offset: usize) -> Result<()> {
        if block.rows() != self.m {
            return Err(dim_mismatch("ingest_block", format!("{} rows", self.m), block.rows()));
        }
        if col_offset != self.seen {
            return Err(Error::OutOfOrderBlock {
                expected: self.seen,
                got: col_offset,
            });
        }
        if col_offset + block.cols() > self.n {
            return Err(dim_mismatch(
                "ingest_block",
                format!("at most {} columns", self.n),
                col_offset + block.cols(),
            ));
        }
        match block {
            MatrixHandle::Dense(d) => {
                for j in 0..d.ncols() {
                    let col: Vec<(usize, f64)> = d.column(j).iter().copied().enumerate().collect();
                    self.fold_column(col_offset + j, &col);
                }
            }
            MatrixHandle::Sparse(s) => {
                for j in 0..s.cols() {
                    let (rows, vals) = s.col(j);
                    let col: Vec<(usize, f64)> = rows.iter().copied().zip(vals.iter().copied()).collect();
                    self.fold_column(col_offset + j, &col);
                }
            }
        }
        self.seen += block.cols();
        Ok(())
    }

    fn fold_column(&mut self, t: usize, col: &[(usize, f64)]) {
        for q in 0..self.config.c {
            let w = self.omega_t[(q, t)];
            let mut dst = self.c_acc.column_mut(q);
            for &(i, v) in col {
                dst[i] += w * v;
            }
        }
        let r = self.config.r;
        let mut rcol = DVector::zeros(r);
        for &(i, v) in col {
            rcol.axpy(v, &self.psi.column(i), 1.0);
        }
        self.r_acc.set_column(t, &rcol);
        if let (Some(sc), Some(sr)) = (&self.s_c, &self.s_r) {
            let mut y = DVector::zeros(sc.sketch_rows());
            for &(i, v) in col {
                let (rows, vals) = sc.column_entries(i).expect("OSNAP operator");
                for (&row, &w) in rows.iter().zip(vals) {
                    y[row] += w * v;
                }
            }
            let (rows, vals) = sr.column_entries(t).expect("OSNAP operator");
            for (&row, &w) in rows.iter().zip(vals) {
                self.m_acc.column_mut(row).axpy(w, &y, 1.0);
            }
        }
    }

    /// Factors of the columns ingested so far.
    pub fn finalize(&self) -> Result<LowRankFactors> {
        Ok(self.finalize_detailed()?.factors)
    }

    pub fn finalize_detailed(&self) -> Result<FinalizeParts> {
        if self.seen == 0 {
            return Err(Error::EmptyStream);
        }
        let u_c = thin_qr(&self.c_acc).0;
        let r_seen = self.r_accumulator();
        let v_r = thin_qr(&r_seen.transpose()).0;
        let n = match (&self.s_c, &self.s_r) {
            (Some(sc), Some(sr)) => {
                let scu = sc.apply_left_dense(&u_c);
                let mut v_pad = Mat::zeros(self.n, v_r.ncols());
                v_pad.rows_mut(0, self.seen).copy_from(&v_r);
                let vs = sr.apply_left_dense(&v_pad).transpose();
                check_full_rank("S_C U_C", &scu, u_c.ncols())?;
                check_full_rank("V_R^T S_R^T", &vs, v_r.ncols())?;
                sketched_core(&scu, &self.m_acc, &vs)?
            }
            _ => {
                let pu = &self.psi * &u_c;
                // With r < c the core is the minimum-norm solution; only
                // rank loss beyond min(r, c) is an error.
                check_full_rank("Psi~ U_C", &pu, u_c.ncols().min(pu.nrows()))?;
                pinv(&pu)? * (r_seen * &v_r)
            }
        };
        let svd = thin_svd_full(&n)?;
        let factors = LowRankFactors {
            u: &u_c * &svd.u,
            sigma: svd.singular_values,
            v: &v_r * &svd.v,
        };
        Ok(FinalizeParts { u_c, v_r, n, factors })
    }

    /// Serializes the state: magic, version, variant, shape, configuration,
    /// columns seen, then `C`, the seen columns of `R` and `M` as
    /// little-endian f64 (column-major), then a CRC32 of everything before.
    /// Operators are re-drawn from the seed on load.
    pub fn to_bytes(&self) -> Vec<u8> {
        let cf = &self.config;
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(match self.variant {
            Variant::Fast => 0,
            Variant::Practical => 1,
        });
        let ints = [
            self.m,
            self.n,
            cf.k,
            cf.c0,
            cf.r0,
            cf.c,
            cf.r,
            cf.s_c,
            cf.s_r,
            cf.block_size,
            cf.osnap_p,
            self.seen,
        ];
        for v in ints {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&cf.epsilon.to_le_bytes());
        out.extend_from_slice(&cf.seed.to_le_bytes());
        let r_seen = self.r_acc.columns(0, self.seen);
        for v in self.c_acc.iter().chain(r_seen.iter()).chain(self.m_acc.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Checkpoint(msg.to_string());
        if bytes.len() < CHECKPOINT_MAGIC.len() + 4 {
            return Err(bad("truncated"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body).to_le_bytes() != tail {
            return Err(bad("checksum mismatch"));
        }
        let mut rd = ByteReader { buf: body, pos: 0 };
        if rd.take(16)? != CHECKPOINT_MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u32::from_le_bytes(rd.take(4)?.try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let variant = match rd.take(1)?[0] {
            0 => Variant::Fast,
            1 => Variant::Practical,
            v => return Err(Error::Checkpoint(format!("unknown variant {v}"))),
        };
        let mut ints = [0usize; 12];
        for v in ints.iter_mut() {
            *v = usize::try_from(rd.u64()?).map_err(|_| bad("size overflow"))?;
        }
        let [m, n, k, c0, r0, c, r, s_c, s_r, block_size, osnap_p, seen] = ints;
        let epsilon = f64::from_bits(rd.u64()?);
        let seed = rd.u64()?;
        let config = StreamSvdConfig {
            k,
            epsilon,
            c0,
            r0,
            c,
            r,
            s_c,
            s_r,
            block_size,
            seed,
            osnap_p,
        };
        if seen > n {
            return Err(bad("more columns seen than the stream holds"));
        }
        let mut state = Self::with_variant(config, m, n, variant)?;
        let m_len = state.m_acc.len();
        let expected = 8 * (m * c + r * seen + m_len);
        if rd.remaining() != expected {
            return Err(Error::Checkpoint(format!(
                "payload has {} bytes, expected {expected}",
                rd.remaining()
            )));
        }
        for v in state.c_acc.iter_mut() {
            *v = f64::from_bits(rd.u64()?);
        }
        for v in state.r_acc.columns_mut(0, seen).iter_mut() {
            *v = f64::from_bits(rd.u64()?);
        }
        for v in state.m_acc.iter_mut() {
            *v = f64::from_bits(rd.u64()?);
        }
        state.seen = seen;
        Ok(state)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl ByteReader<'_> {
    fn take(&mut self, len: usize) -> Result<&[u8]> {
        if self.pos + len > self.buf.len() {
            return Err(Error::Checkpoint("truncated".into()));
        }
        let out = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

fn check_full_rank(which: &'static str, sketched: &Mat, want: usize) -> Result<()> {
    let got = numerical_rank(sketched)?;
    if got < want {
        return Err(Error::RankCollapse {
            which,
            sketched: got,
            original: want,
        });
    }
    Ok(())
}

/// Streams `a` through a fresh state in blocks of `config.block_size`.
pub fn stream_matrix(a: &MatrixHandle, config: &StreamSvdConfig, variant: Variant) -> Result<StreamSvdState> {
    let mut state = StreamSvdState::with_variant(config.clone(), a.rows(), a.cols(), variant)?;
    for (offset, block) in column_blocks(a, config.block_size) {
        state.ingest_block(&block, offset)?;
    }
    Ok(state)
}

/// One-call fast single-pass SVD.
pub fn fast_sp_svd(a: &MatrixHandle, config: &StreamSvdConfig) -> Result<LowRankFactors> {
    stream_matrix(a, config, Variant::Fast)?.finalize()
}

/// One-call practical single-pass SVD.
pub fn practical_sp_svd(a: &MatrixHandle, config: &StreamSvdConfig) -> Result<LowRankFactors> {
    stream_matrix(a, config, Variant::Practical)?.finalize()
}

/// `sqrt(sum_{i > k} sigma_i^2)` of `a`.
pub fn tail_norm(a: &Mat, k: usize) -> Result<f64> {
    let sv = thin_svd(a)?.singular_values;
    Ok(sv.iter().skip(k).map(|s| s * s).sum::<f64>().sqrt())
}

/// `||A - U Sigma V^T||_F / ||A - A_k||_F - 1`.
pub fn svd_error_ratio(a: &Mat, factors: &LowRankFactors, k: usize) -> Result<f64> {
    let tail = tail_norm(a, k)?;
    if tail <= 1e-12 * a.norm() {
        return Err(Error::DegenerateTail);
    }
    Ok(factors.residual_fro(a) / tail - 1.0)
}

/// Empirical `eps` for which the projection onto `basis` is SF(eps, k):
/// `k ||(I - P P^T) A||_2^2 / ||A - A_k||_F^2` with `P` acting on the column
/// space (`Side::Left`, basis `m x q`) or row space (`Side::Right`, `n x q`).
pub fn sf_deviation(basis: &Mat, a: &MatrixHandle, k: usize, side: Side) -> Result<f64> {
    let a = a.to_dense();
    let dim = match side {
        Side::Left => a.nrows(),
        Side::Right => a.ncols(),
    };
    if basis.nrows() != dim {
        return Err(dim_mismatch("sf_deviation", format!("basis with {dim} rows"), basis.nrows()));
    }
    let tail = tail_norm(&a, k)?;
    if tail <= 1e-12 * a.norm() {
        return Err(Error::DegenerateTail);
    }
    let resid = match side {
        Side::Left => &a - basis * (basis.transpose() * &a),
        Side::Right => &a - (&a * basis) * basis.transpose(),
    };
    let s = spectral_norm(&resid)?;
    Ok(k as f64 * s * s / (tail * tail))
}

/// Orthonormal basis of the row space of `S A` (`Side::Right`, `n x q`) or of
/// the column space of `A S^T` (`Side::Left`, `m x q`).
pub fn sketch_basis(a: &MatrixHandle, s: &SketchOperator, side: Side) -> Result<Mat> {
    Ok(match side {
        Side::Right => thin_qr(&s.apply_left(a)?.transpose()).0,
        Side::Left => thin_qr(&s.apply_right(a)?).0,
    })
}
