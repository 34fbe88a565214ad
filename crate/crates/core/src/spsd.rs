//! SPSD approximation `K ~ C X C^T` of kernel matrices that are only
//! accessible entry by entry.
//!
//! [`approximate`] samples `c` columns uniformly, then estimates the core
//! from an `s x s` block of `K` picked by two independent leverage-score
//! samplers built from `C`, and projects it onto the PSD cone. It reads at
//! most `n c + s^2 + c` distinct entries. [`nystrom`], [`fast_spsd_baseline`]
//! (one shared sampler, no projection) and [`optimal_core`] are the reference
//! methods.

use std::collections::HashMap;

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::gmr::{self, GmrProblem, RhoDiagnostic};
use crate::matrix::{pinv, symmetric_eig, Mat};
use crate::rng::{derive_seed, substream, STREAM_AUX};
use crate::sketch::{leverage_scores, ScoreSide, SketchFamily, SketchOperator, SketchSpec};

/// Symmetric matrix accessed one entry at a time, with a count of the
/// distinct entries read so far.
pub trait EntryOracle {
    fn dim(&self) -> usize;
    /// `K[i, j]`; reading `(i, j)` or `(j, i)` again is free.
    fn entry(&mut self, i: usize, j: usize) -> Result<f64>;
    /// Number of distinct unordered pairs read.
    fn query_count(&self) -> usize;
}

fn canonical(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

/// `exp(-sigma ||x_i - x_j||^2)` over the columns of `points`, evaluated in
/// canonical index order so that the result is exactly symmetric.
pub fn rbf_value(points: &Mat, sigma: f64, i: usize, j: usize) -> f64 {
    if i == j {
        return 1.0;
    }
    let (i, j) = canonical(i, j);
    let d2: f64 = points
        .column(i)
        .iter()
        .zip(points.column(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    (-sigma * d2).exp()
}

/// Full `n x n` RBF kernel, entry for entry identical to [`KernelOracle`].
pub fn rbf_kernel_matrix(points: &Mat, sigma: f64) -> Mat {
    let n = points.ncols();
    let mut k = Mat::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = rbf_value(points, sigma, i, j);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Lazily evaluated RBF kernel over the columns of a `d x n` point block.
///
/// Writes go through `&mut self`, so one owner evaluates entries at a time.
#[derive(Debug, Clone)]
pub struct KernelOracle {
    points: Mat,
    sigma: f64,
    cache: HashMap<(usize, usize), f64>,
}

impl KernelOracle {
    pub fn new(points: Mat, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("RBF scale must be positive, got {sigma}")));
        }
        Ok(Self {
            points,
            sigma,
            cache: HashMap::new(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn points(&self) -> &Mat {
        &self.points
    }

    /// The whole kernel, without touching the query counter.
    pub fn dense(&self) -> Mat {
        rbf_kernel_matrix(&self.points, self.sigma)
    }
}

impl EntryOracle for KernelOracle {
    fn dim(&self) -> usize {
        self.points.ncols()
    }

    fn entry(&mut self, i: usize, j: usize) -> Result<f64> {
        let n = self.dim();
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { i, j, n });
        }
        let (points, sigma) = (&self.points, self.sigma);
        Ok(*self
            .cache
            .entry(canonical(i, j))
            .or_insert_with(|| rbf_value(points, sigma, i, j)))
    }

    fn query_count(&self) -> usize {
        self.cache.len()
    }
}

/// Oracle over an explicit symmetric matrix, counting reads the same way.
#[derive(Debug, Clone)]
pub struct DenseOracle {
    k: Mat,
    seen: std::collections::HashSet<(usize, usize)>,
}

impl DenseOracle {
    pub fn new(k: Mat) -> Result<Self> {
        if k.nrows() != k.ncols() {
            return Err(Error::NotSquare {
                rows: k.nrows(),
                cols: k.ncols(),
            });
        }
        Ok(Self {
            k,
            seen: Default::default(),
        })
    }
}

impl EntryOracle for DenseOracle {
    fn dim(&self) -> usize {
        self.k.nrows()
    }

    fn entry(&mut self, i: usize, j: usize) -> Result<f64> {
        let n = self.dim();
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { i, j, n });
        }
        let p = canonical(i, j);
        self.seen.insert(p);
        Ok(self.k[p])
    }

    fn query_count(&self) -> usize {
        self.seen.len()
    }
}

#[derive(Debug, Clone)]
pub struct SpsdApproximation {
    /// `n x c` sampled columns of `K`.
    pub c: Mat,
    /// `c x c` core.
    pub core: Mat,
    /// Core before any cone projection.
    pub raw_core: Mat,
    pub column_indices: Vec<usize>,
    /// Distinct entries of `K` read by this call.
    pub queries_used: usize,
}

impl SpsdApproximation {
    /// `C core C^T`.
    pub fn reconstruct(&self) -> Mat {
        &self.c * &self.core * self.c.transpose()
    }

    /// `||K - C core C^T||_F`.
    pub fn residual_fro(&self, k: &Mat) -> f64 {
        (k - self.reconstruct()).norm()
    }

    /// `||K - C raw_core C^T||_F`.
    pub fn raw_residual_fro(&self, k: &Mat) -> f64 {
        (k - &self.c * &self.raw_core * self.c.transpose()).norm()
    }

    /// `||K - C core C^T||_F / ||K||_F`.
    pub fn error_ratio(&self, k: &Mat) -> f64 {
        self.residual_fro(k) / k.norm()
    }
}

/// `c` distinct column indices drawn uniformly, sorted.
pub fn sample_columns(n: usize, c: usize, seed: u64) -> Result<Vec<usize>> {
    if c > n {
        return Err(Error::Config(format!("cannot sample {c} of {n} columns")));
    }
    let mut idx = sample(&mut substream(seed, STREAM_AUX), n, c).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

fn gather_columns(oracle: &mut impl EntryOracle, cols: &[usize]) -> Result<Mat> {
    let n = oracle.dim();
    let mut c = Mat::zeros(n, cols.len());
    for (t, &j) in cols.iter().enumerate() {
        for i in 0..n {
            c[(i, t)] = oracle.entry(i, j)?;
        }
    }
    Ok(c)
}

/// `S_1 K S_2^T` for row-sampling operators, read entry by entry.
fn gather_block(
    oracle: &mut impl EntryOracle,
    rows: &(Vec<usize>, Vec<f64>),
    cols: &(Vec<usize>, Vec<f64>),
) -> Result<Mat> {
    let mut m = Mat::zeros(rows.0.len(), cols.0.len());
    for (b, (&j, &wj)) in cols.0.iter().zip(&cols.1).enumerate() {
        for (a, (&i, &wi)) in rows.0.iter().zip(&rows.1).enumerate() {
            m[(a, b)] = wi * oracle.entry(i, j)? * wj;
        }
    }
    Ok(m)
}

fn sampled(op: &SketchOperator) -> (Vec<usize>, Vec<f64>) {
    op.sampled_rows().expect("row-sampling operator")
}

fn leverage_sampler(c: &Mat, s: usize, seed: u64) -> Result<SketchOperator> {
    let scores = leverage_scores(c, ScoreSide::Row)?;
    SketchOperator::realize(&SketchSpec::new(
        SketchFamily::LeverageSample(scores.scores),
        s,
        c.nrows(),
        seed,
    ))
}

/// Seeds of the two samplers used by [`approximate`] for a given call seed.
/// The baseline reuses the first one so paired runs share randomness.
fn sampler_seeds(seed: u64) -> (u64, u64) {
    (derive_seed(seed, 11), derive_seed(seed, 12))
}

/// Core from two sampling operators, then PSD projection.
fn two_sided_core(
    oracle: &mut impl EntryOracle,
    c: &Mat,
    s1: &SketchOperator,
    s2: &SketchOperator,
) -> Result<(Mat, Mat)> {
    let s1c = s1.apply_left_dense(c);
    let s2c = s2.apply_left_dense(c);
    check_rank("S_1 C", c, &s1c)?;
    check_rank("C^T S_2^T", c, &s2c)?;
    let block = gather_block(oracle, &sampled(s1), &sampled(s2))?;
    let raw = gmr::sketched_core(&s1c, &block, &s2c.transpose())?;
    let core = gmr::project_psd(&raw)?;
    Ok((raw, core))
}

fn check_rank(which: &'static str, original: &Mat, sketched: &Mat) -> Result<()> {
    let want = crate::matrix::numerical_rank(original)?;
    let got = crate::matrix::numerical_rank(sketched)?;
    if got < want {
        return Err(Error::RankCollapse {
            which,
            sketched: got,
            original: want,
        });
    }
    Ok(())
}

fn finish(
    oracle: &impl EntryOracle,
    start: usize,
    c: Mat,
    raw_core: Mat,
    core: Mat,
    column_indices: Vec<usize>,
) -> SpsdApproximation {
    SpsdApproximation {
        c,
        core,
        raw_core,
        column_indices,
        queries_used: oracle.query_count() - start,
    }
}

/// Query-frugal SPSD approximation with `c` uniformly sampled columns and
/// `s x s` leverage-sampled core block.
pub fn approximate(oracle: &mut impl EntryOracle, c: usize, s: usize, seed: u64) -> Result<SpsdApproximation> {
    if s < c {
        return Err(Error::InvalidSpec(format!("core sample size {s} is below c = {c}")));
    }
    let start = oracle.query_count();
    let cols = sample_columns(oracle.dim(), c, seed)?;
    let cmat = gather_columns(oracle, &cols)?;
    let (seed1, seed2) = sampler_seeds(seed);
    let s1 = leverage_sampler(&cmat, s, seed1)?;
    let s2 = leverage_sampler(&cmat, s, seed2)?;
    let (raw, core) = two_sided_core(oracle, &cmat, &s1, &s2)?;
    Ok(finish(oracle, start, cmat, raw, core, cols))
}

/// [`approximate`] with both samplers replaced by the identity, i.e. every
/// row sampled exactly once. Yields the projected optimal core.
pub fn approximate_exhaustive(oracle: &mut impl EntryOracle, c: usize, seed: u64) -> Result<SpsdApproximation> {
    let start = oracle.query_count();
    let cols = sample_columns(oracle.dim(), c, seed)?;
    let cmat = gather_columns(oracle, &cols)?;
    let id = SketchOperator::realize(&SketchSpec::identity(oracle.dim()))?;
    let (raw, core) = two_sided_core(oracle, &cmat, &id, &id)?;
    Ok(finish(oracle, start, cmat, raw, core, cols))
}

/// Nystrom approximation: core `W^+` for the `c x c` intersection block `W`.
pub fn nystrom(oracle: &mut impl EntryOracle, c: usize, seed: u64) -> Result<SpsdApproximation> {
    let start = oracle.query_count();
    let cols = sample_columns(oracle.dim(), c, seed)?;
    let cmat = gather_columns(oracle, &cols)?;
    let w = cmat.select_rows(cols.iter());
    let raw = pinv(&w)?;
    let core = gmr::project_symmetric(&raw)?;
    Ok(finish(oracle, start, cmat, raw, core, cols))
}

/// Single shared leverage sampler `S`: core `(SC)^+ (S K S^T) (C^T S^T)^+`.
pub fn fast_spsd_baseline(oracle: &mut impl EntryOracle, c: usize, s: usize, seed: u64) -> Result<SpsdApproximation> {
    if s < c || s > oracle.dim() {
        return Err(Error::InvalidSpec(format!(
            "need c <= s <= n, got c = {c}, s = {s}, n = {}",
            oracle.dim()
        )));
    }
    let start = oracle.query_count();
    let cols = sample_columns(oracle.dim(), c, seed)?;
    let cmat = gather_columns(oracle, &cols)?;
    let op = leverage_sampler(&cmat, s, sampler_seeds(seed).0)?;
    let sc = op.apply_left_dense(&cmat);
    check_rank("S C", &cmat, &sc)?;
    let rows = sampled(&op);
    let block = gather_block(oracle, &rows, &rows)?;
    let raw = gmr::sketched_core(&sc, &block, &sc.transpose())?;
    let core = gmr::project_symmetric(&raw)?;
    Ok(finish(oracle, start, cmat, raw, core, cols))
}

/// Optimal core `C^+ K (C^+)^T`; reads all of `K`.
pub fn optimal_core(oracle: &mut impl EntryOracle, c: usize, seed: u64) -> Result<SpsdApproximation> {
    let start = oracle.query_count();
    let cols = sample_columns(oracle.dim(), c, seed)?;
    let cmat = gather_columns(oracle, &cols)?;
    let n = oracle.dim();
    let all: Vec<usize> = (0..n).collect();
    let k = gather_columns(oracle, &all)?;
    let raw = gmr::sketched_core(&cmat, &k, &cmat.transpose())?;
    let core = gmr::project_symmetric(&raw)?;
    Ok(finish(oracle, start, cmat, raw, core, cols))
}

/// `sum_{i<=k} lambda_i^2 / sum_i lambda_i^2` with eigenvalues ordered by
/// magnitude. A zero matrix gives `1`.
pub fn spectral_ratio_eta(k_dense: &Mat, k: usize) -> Result<f64> {
    let eig = symmetric_eig(k_dense)?;
    let mut sq: Vec<f64> = eig.values.iter().map(|v| v * v).collect();
    sq.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = sq.iter().sum();
    if total == 0.0 {
        return Ok(1.0);
    }
    Ok(sq.iter().take(k).sum::<f64>() / total)
}

/// Largest `sigma` in `[lo, hi]` (bisection on `log sigma`) whose RBF kernel
/// still has `eta(k) >= target`. Wider kernels (smaller `sigma`) concentrate
/// the spectrum, so `eta` decreases in `sigma`. Returns `lo` if even `lo`
/// misses the target.
pub fn tune_sigma(points: &Mat, k: usize, target: f64, lo: f64, hi: f64) -> Result<f64> {
    let eta = |s: f64| spectral_ratio_eta(&rbf_kernel_matrix(points, s), k);
    if eta(hi)? >= target {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    if eta(lo)? < target {
        return Ok(lo);
    }
    for _ in 0..40 {
        let mid = 0.5 * (a + b);
        if eta(mid.exp())? >= target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(a.exp())
}

/// Residual-ratio diagnostic of the symmetric problem `min_X ||K - C X C^T||`.
pub fn symmetric_rho(k: &Mat, c: &Mat) -> Result<RhoDiagnostic> {
    gmr::rho(&GmrProblem::new(k.clone(), c.clone(), c.transpose())?)
}

/// Heuristic core sample size `max(c / sqrt(eps), c / (eps rho^2)) + c ln c`
/// with unit constants.
pub fn suggest_sample_size(c: usize, epsilon: f64, rho: f64) -> usize {
    let base = gmr::theorem_sketch_size(c, epsilon, rho).unwrap_or(c);
    base + (c as f64 * (c as f64).ln().max(0.0)).ceil() as usize
}
