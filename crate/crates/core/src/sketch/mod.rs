//! Sketching operators.
//!
//! A [`SketchSpec`] names a family, the sketch size `s`, the source dimension
//! `m` and a seed; [`SketchOperator::realize`] draws the random tables once.
//! Operators then apply from the left (`S A`, `s x n`) or from the right
//! (`A S^T`, `m x s`) at the family's natural cost: sampling and hashing
//! sketches touch each stored entry of `A` a constant number of times.

mod apply;
mod leverage;

pub use leverage::{leverage_scores, LeverageScores, ScoreSide};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{Mat, MatrixHandle};
use crate::rng::{substream, STREAM_SKETCH};

/// Lower clamp on leverage-sampling probabilities, relative to `1/m`.
pub const LEVERAGE_PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum SketchFamily {
    /// Row sampling with replacement, `p_i` proportional to the given scores.
    LeverageSample(Vec<f64>),
    /// Row sampling with replacement, `p_i = 1/m`.
    UniformSample,
    /// i.i.d. `N(0, 1/s)` entries.
    Gaussian,
    /// `(1/sqrt(s)) P H D` on the zero-padded power-of-two dimension.
    Srht,
    /// One unscaled random sign per column at a uniform row.
    CountSketch,
    /// `p` entries `+-1/sqrt(p)` per column at distinct uniform rows.
    Osnap { nnz_per_col: usize },
    /// The `m x m` identity. Validation operator: sketching with it is exact.
    Identity,
    /// `outer(inner(.))`: the inner operator maps `m -> inner.sketch_rows`,
    /// the outer one (drawn from this spec's seed) maps on to `sketch_rows`.
    Composed {
        inner: Box<SketchSpec>,
        outer: Box<SketchFamily>,
    },
}

impl SketchFamily {
    pub fn name(&self) -> &'static str {
        match self {
            SketchFamily::LeverageSample(_) => "leverage",
            SketchFamily::UniformSample => "uniform",
            SketchFamily::Gaussian => "gaussian",
            SketchFamily::Srht => "srht",
            SketchFamily::CountSketch => "count",
            SketchFamily::Osnap { .. } => "osnap",
            SketchFamily::Identity => "identity",
            SketchFamily::Composed { .. } => "composed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SketchSpec {
    pub family: SketchFamily,
    /// `s`
    pub sketch_rows: usize,
    /// `m`
    pub source_dim: usize,
    pub seed: u64,
}

impl SketchSpec {
    pub fn new(family: SketchFamily, sketch_rows: usize, source_dim: usize, seed: u64) -> Self {
        Self {
            family,
            sketch_rows,
            source_dim,
            seed,
        }
    }

    pub fn gaussian(s: usize, m: usize, seed: u64) -> Self {
        Self::new(SketchFamily::Gaussian, s, m, seed)
    }

    pub fn count_sketch(s: usize, m: usize, seed: u64) -> Self {
        Self::new(SketchFamily::CountSketch, s, m, seed)
    }

    pub fn osnap(s: usize, m: usize, p: usize, seed: u64) -> Self {
        Self::new(SketchFamily::Osnap { nnz_per_col: p }, s, m, seed)
    }

    pub fn identity(m: usize) -> Self {
        Self::new(SketchFamily::Identity, m, m, 0)
    }

    /// OSNAP `m -> inner_rows` followed by a Gaussian projection to `s`.
    pub fn osnap_gaussian(s: usize, inner_rows: usize, m: usize, p: usize, seed: u64) -> Self {
        let inner = Self::osnap(inner_rows, m, p, crate::rng::derive_seed(seed, 0xA5));
        Self::new(
            SketchFamily::Composed {
                inner: Box::new(inner),
                outer: Box::new(SketchFamily::Gaussian),
            },
            s,
            m,
            seed,
        )
    }

    fn validate(&self) -> Result<()> {
        let (s, m) = (self.sketch_rows, self.source_dim);
        if s == 0 {
            return Err(Error::InvalidSpec("sketch size must be at least 1".into()));
        }
        match &self.family {
            SketchFamily::LeverageSample(scores) => {
                if s > m {
                    return Err(Error::InvalidSpec(format!("sampling needs s <= m ({s} > {m})")));
                }
                if scores.len() != m {
                    return Err(Error::InvalidSpec(format!(
                        "{} leverage scores for dimension {m}",
                        scores.len()
                    )));
                }
                if scores.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                    return Err(Error::InvalidSpec("leverage scores must be finite and nonnegative".into()));
                }
                if scores.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::InvalidSpec("leverage scores sum to zero".into()));
                }
            }
            SketchFamily::UniformSample | SketchFamily::Srht => {
                if s > m {
                    return Err(Error::InvalidSpec(format!(
                        "{} needs s <= m ({s} > {m})",
                        self.family.name()
                    )));
                }
            }
            SketchFamily::Osnap { nnz_per_col } => {
                if *nnz_per_col == 0 || *nnz_per_col > s {
                    return Err(Error::InvalidSpec(format!(
                        "OSNAP needs 1 <= p <= s (p = {nnz_per_col}, s = {s})"
                    )));
                }
            }
            SketchFamily::Identity => {
                if s != m {
                    return Err(Error::InvalidSpec(format!("identity sketch needs s = m ({s} != {m})")));
                }
            }
            SketchFamily::Composed { inner, .. } => {
                if inner.source_dim != m {
                    return Err(Error::InvalidSpec(format!(
                        "composed inner source dimension {} != {m}",
                        inner.source_dim
                    )));
                }
            }
            SketchFamily::Gaussian | SketchFamily::CountSketch => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Realized {
    Identity,
    /// Row `t` of `S` has `scales[t]` at column `indices[t]`.
    Sampling { indices: Vec<usize>, scales: Vec<f64> },
    Gaussian(Mat),
    Srht {
        padded: usize,
        signs: Vec<f64>,
        rows: Vec<usize>,
    },
    /// Column `j` of `S` holds `values[j*p..(j+1)*p]` at `rows[j*p..(j+1)*p]`.
    Hashing {
        per_col: usize,
        rows: Vec<usize>,
        values: Vec<f64>,
    },
    Composed {
        inner: Box<SketchOperator>,
        outer: Box<SketchOperator>,
    },
}

/// A realized sketching matrix `S` of size `s x m`. Immutable once drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchOperator {
    spec: SketchSpec,
    realized: Realized,
}

impl SketchOperator {
    /// Draws the operator's random tables from `spec.seed`. The same spec
    /// always yields the same operator.
    pub fn realize(spec: &SketchSpec) -> Result<Self> {
        spec.validate()?;
        let (s, m) = (spec.sketch_rows, spec.source_dim);
        let mut rng = substream(spec.seed, STREAM_SKETCH);
        let realized = match &spec.family {
            SketchFamily::Identity => Realized::Identity,
            SketchFamily::UniformSample => {
                let scale = (m as f64 / s as f64).sqrt();
                Realized::Sampling {
                    indices: (0..s).map(|_| rng.random_range(0..m)).collect(),
                    scales: vec![scale; s],
                }
            }
            SketchFamily::LeverageSample(scores) => {
                let total: f64 = scores.iter().sum();
                let dist = WeightedIndex::new(scores.iter().copied())
                    .map_err(|e| Error::InvalidSpec(format!("leverage scores: {e}")))?;
                let floor = LEVERAGE_PROB_FLOOR / m as f64;
                let indices: Vec<usize> = (0..s).map(|_| dist.sample(&mut rng)).collect();
                let scales = indices
                    .iter()
                    .map(|&i| 1.0 / (s as f64 * (scores[i] / total).max(floor)).sqrt())
                    .collect();
                Realized::Sampling { indices, scales }
            }
            SketchFamily::Gaussian => {
                let sd = 1.0 / (s as f64).sqrt();
                // Filled column by column.
                let mut g = Mat::zeros(s, m);
                for j in 0..m {
                    for i in 0..s {
                        let z: f64 = rng.sample(StandardNormal);
                        g[(i, j)] = z * sd;
                    }
                }
                Realized::Gaussian(g)
            }
            SketchFamily::Srht => {
                let padded = m.next_power_of_two();
                let signs = (0..padded)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                let rows = index::sample(&mut rng, padded, s).into_vec();
                Realized::Srht { padded, signs, rows }
            }
            SketchFamily::CountSketch => {
                let mut rows = Vec::with_capacity(m);
                let mut values = Vec::with_capacity(m);
                for _ in 0..m {
                    rows.push(rng.random_range(0..s));
                    values.push(if rng.random::<bool>() { 1.0 } else { -1.0 });
                }
                Realized::Hashing {
                    per_col: 1,
                    rows,
                    values,
                }
            }
            SketchFamily::Osnap { nnz_per_col } => {
                let p = *nnz_per_col;
                let v = 1.0 / (p as f64).sqrt();
                let mut rows = Vec::with_capacity(m * p);
                let mut values = Vec::with_capacity(m * p);
                for _ in 0..m {
                    let mut picked = index::sample(&mut rng, s, p).into_vec();
                    picked.sort_unstable();
                    for r in picked {
                        rows.push(r);
                        values.push(if rng.random::<bool>() { v } else { -v });
                    }
                }
                Realized::Hashing {
                    per_col: p,
                    rows,
                    values,
                }
            }
            SketchFamily::Composed { inner, outer } => {
                let inner_op = SketchOperator::realize(inner)?;
                let outer_spec = SketchSpec::new((**outer).clone(), s, inner.sketch_rows, spec.seed);
                let outer_op = SketchOperator::realize(&outer_spec)?;
                Realized::Composed {
                    inner: Box::new(inner_op),
                    outer: Box::new(outer_op),
                }
            }
        };
        Ok(Self {
            spec: spec.clone(),
            realized,
        })
    }

    pub fn spec(&self) -> &SketchSpec {
        &self.spec
    }

    /// `s`
    pub fn sketch_rows(&self) -> usize {
        self.spec.sketch_rows
    }

    /// `m`
    pub fn source_dim(&self) -> usize {
        self.spec.source_dim
    }

    /// Sampled source indices and their scales, for sampling families and
    /// the identity.
    pub fn sampled_rows(&self) -> Option<(Vec<usize>, Vec<f64>)> {
        match &self.realized {
            Realized::Sampling { indices, scales } => Some((indices.clone(), scales.clone())),
            Realized::Identity => Some(((0..self.source_dim()).collect(), vec![1.0; self.source_dim()])),
            _ => None,
        }
    }

    /// Nonzero rows and values of column `j`, for hashing families.
    pub fn column_entries(&self, j: usize) -> Option<(&[usize], &[f64])> {
        match &self.realized {
            Realized::Hashing { per_col, rows, values } => {
                let r = j * per_col..(j + 1) * per_col;
                Some((&rows[r.clone()], &values[r]))
            }
            _ => None,
        }
    }

    /// Stored nonzeros of the explicit matrix, where that is meaningful.
    pub fn nnz(&self) -> usize {
        match &self.realized {
            Realized::Identity => self.source_dim(),
            Realized::Sampling { indices, .. } => indices.len(),
            Realized::Gaussian(g) => g.len(),
            Realized::Srht { .. } => self.sketch_rows() * self.source_dim(),
            Realized::Hashing { rows, .. } => rows.len(),
            Realized::Composed { inner, outer } => inner.nnz() + outer.nnz(),
        }
    }

    /// The explicit `s x m` matrix.
    pub fn to_dense(&self) -> Mat {
        let (s, m) = (self.sketch_rows(), self.source_dim());
        match &self.realized {
            Realized::Identity => Mat::identity(m, m),
            Realized::Gaussian(g) => g.clone(),
            Realized::Sampling { indices, scales } => {
                let mut d = Mat::zeros(s, m);
                for (t, (&i, &sc)) in indices.iter().zip(scales).enumerate() {
                    d[(t, i)] += sc;
                }
                d
            }
            Realized::Hashing { .. } => {
                let mut d = Mat::zeros(s, m);
                for j in 0..m {
                    let (rows, vals) = self.column_entries(j).unwrap();
                    for (&r, &v) in rows.iter().zip(vals) {
                        d[(r, j)] += v;
                    }
                }
                d
            }
            Realized::Srht { .. } => self.apply_left_dense(&Mat::identity(m, m)),
            Realized::Composed { inner, outer } => {
                if let Realized::Hashing { .. } = inner.realized {
                    let o = outer.to_dense();
                    let mut d = Mat::zeros(s, m);
                    for j in 0..m {
                        let (rows, vals) = inner.column_entries(j).unwrap();
                        let mut col = d.column_mut(j);
                        for (&r, &v) in rows.iter().zip(vals) {
                            col.axpy(v, &o.column(r), 1.0);
                        }
                    }
                    d
                } else {
                    outer.apply_left_dense(&inner.to_dense())
                }
            }
        }
    }

    /// `S A`, with `s` rows.
    pub fn apply_left(&self, a: &MatrixHandle) -> Result<Mat> {
        Ok(self.apply_left_counted(a)?.0)
    }

    /// `S A` together with the number of scalar multiply-adds performed.
    pub fn apply_left_counted(&self, a: &MatrixHandle) -> Result<(Mat, usize)> {
        self.check_source(a.rows(), "apply_left")?;
        Ok(match a {
            MatrixHandle::Dense(d) => self.left_dense(d),
            MatrixHandle::Sparse(sp) => self.left_sparse(sp),
        })
    }

    /// `S A` for a dense `A`. Panics on dimension mismatch.
    pub fn apply_left_dense(&self, a: &Mat) -> Mat {
        assert_eq!(a.nrows(), self.source_dim(), "apply_left: dimension mismatch");
        self.left_dense(a).0
    }

    /// `A S^T`, with `s` columns. Always equal to `(S A^T)^T`.
    pub fn apply_right(&self, a: &MatrixHandle) -> Result<Mat> {
        self.check_source(a.cols(), "apply_right")?;
        Ok(self.apply_left(&a.transpose())?.transpose())
    }

    /// `A S^T` for a dense `A`. Panics on dimension mismatch.
    pub fn apply_right_dense(&self, a: &Mat) -> Mat {
        assert_eq!(a.ncols(), self.source_dim(), "apply_right: dimension mismatch");
        self.left_dense(&a.transpose()).0.transpose()
    }

    fn check_source(&self, got: usize, op: &'static str) -> Result<()> {
        if got != self.source_dim() {
            return Err(crate::error::dim_mismatch(
                op,
                format!("source dimension {}", self.source_dim()),
                got,
            ));
        }
        Ok(())
    }
}

/// `||B^T S^T S A - B^T A||_F / (||A||_F ||B||_F)`; zero when either input is zero.
pub fn property2_deviation(s: &SketchOperator, a: &MatrixHandle, b: &MatrixHandle) -> Result<f64> {
    if a.rows() != b.rows() {
        return Err(crate::error::dim_mismatch(
            "property2_deviation",
            format!("B with {} rows", a.rows()),
            b.rows(),
        ));
    }
    let denom = a.fro_norm() * b.fro_norm();
    if denom == 0.0 {
        return Ok(0.0);
    }
    let sa = s.apply_left(a)?;
    let sb = s.apply_left(b)?;
    let exact = b.to_dense().transpose() * a.to_dense();
    Ok((sb.transpose() * sa - exact).norm() / denom)
}
