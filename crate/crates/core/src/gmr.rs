//! Generalized matrix regression: `min_X ||A - C X R||_F`.
//!
//! [`solve_exact`] returns `X* = C^+ A R^+`. [`solve_fast`] solves the
//! sketched problem `min_X ||S_C C X R S_R^T - S_C A S_R^T||_F`, whose
//! solution `(S_C C)^+ S_C A S_R^T (R S_R^T)^+` only involves sketch-sized
//! matrices. For symmetric `A` with `R = C^T` the sketched core can be
//! projected onto the symmetric or PSD cone ([`solve_fast_symmetric`]).

use crate::error::{dim_mismatch, Error, Result};
use crate::matrix::{
    gmr_residual, numerical_rank, pseudo_inverse_apply, symmetric_eig, thin_svd, Mat,
    MatrixHandle, Side,
};
use crate::sketch::{SketchOperator, SketchSpec};

/// Default ratio between sketch size and `max(c, r)`.
pub const DEFAULT_SKETCH_FACTOR: f64 = 10.0;

/// Relative asymmetry tolerated by [`solve_fast_symmetric`].
const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GmrProblem {
    /// `m x n`
    pub a: MatrixHandle,
    /// `m x c`
    pub c: Mat,
    /// `r x n`
    pub r: Mat,
}

impl GmrProblem {
    pub fn new(a: impl Into<MatrixHandle>, c: Mat, r: Mat) -> Result<Self> {
        let a = a.into();
        if c.nrows() != a.rows() {
            return Err(dim_mismatch("GmrProblem", format!("C with {} rows", a.rows()), c.nrows()));
        }
        if r.ncols() != a.cols() {
            return Err(dim_mismatch("GmrProblem", format!("R with {} cols", a.cols()), r.ncols()));
        }
        if c.ncols() > a.rows() || r.nrows() > a.cols() {
            return Err(dim_mismatch(
                "GmrProblem",
                format!("c <= {} and r <= {}", a.rows(), a.cols()),
                format!("c = {}, r = {}", c.ncols(), r.nrows()),
            ));
        }
        Ok(Self { a, c, r })
    }

    fn is_degenerate(&self) -> bool {
        self.c.ncols() == 0 || self.r.nrows() == 0
    }

    fn empty_solution(&self, exact: bool) -> GmrSolution {
        GmrSolution {
            core: Mat::zeros(self.c.ncols(), self.r.nrows()),
            residual_fro: self.a.fro_norm(),
            exact,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmrSolution {
    /// `c x r` core matrix.
    pub core: Mat,
    /// `||A - C core R||_F`
    pub residual_fro: f64,
    /// True for `C^+ A R^+`.
    pub exact: bool,
}

impl GmrSolution {
    /// `residual / optimal_residual - 1`.
    pub fn error_ratio(&self, optimal: &GmrSolution) -> f64 {
        self.residual_fro / optimal.residual_fro - 1.0
    }
}

/// `(S_C C)^+ M (R S_R^T)^+` for already-sketched inputs.
pub fn sketched_core(sc_c: &Mat, m: &Mat, r_sr: &Mat) -> Result<Mat> {
    let left = pseudo_inverse_apply(sc_c, m, Side::Left)?;
    pseudo_inverse_apply(r_sr, &left, Side::Right)
}

pub fn solve_exact(p: &GmrProblem) -> Result<GmrSolution> {
    if p.is_degenerate() {
        return Ok(p.empty_solution(true));
    }
    let core = match &p.a {
        MatrixHandle::Dense(a) => sketched_core(&p.c, a, &p.r)?,
        sparse => {
            let ca = sparse.left_mul_dense(&crate::matrix::pinv(&p.c)?);
            pseudo_inverse_apply(&p.r, &ca, Side::Right)?
        }
    };
    let residual_fro = gmr_residual(&p.a, &p.c, &core, &p.r);
    Ok(GmrSolution {
        core,
        residual_fro,
        exact: true,
    })
}

/// Realizes both sketches and runs [`solve_fast_with`].
pub fn solve_fast(p: &GmrProblem, sc_spec: &SketchSpec, sr_spec: &SketchSpec) -> Result<GmrSolution> {
    let sc = SketchOperator::realize(sc_spec)?;
    let sr = SketchOperator::realize(sr_spec)?;
    solve_fast_with(p, &sc, &sr)
}

/// Sketched solve with realized operators `S_C` (`s_c x m`) and `S_R` (`s_r x n`).
///
/// Fails with [`Error::RankCollapse`] when `S_C C` or `R S_R^T` has lower
/// numerical rank than `C` or `R`.
pub fn solve_fast_with(p: &GmrProblem, sc: &SketchOperator, sr: &SketchOperator) -> Result<GmrSolution> {
    if sc.source_dim() != p.a.rows() {
        return Err(dim_mismatch("solve_fast", format!("S_C over {} rows", p.a.rows()), sc.source_dim()));
    }
    if sr.source_dim() != p.a.cols() {
        return Err(dim_mismatch("solve_fast", format!("S_R over {} cols", p.a.cols()), sr.source_dim()));
    }
    if p.is_degenerate() {
        return Ok(p.empty_solution(false));
    }
    let sc_c = sc.apply_left_dense(&p.c);
    let r_sr = sr.apply_right_dense(&p.r);
    check_rank("S_C C", &p.c, &sc_c)?;
    check_rank("R S_R^T", &p.r, &r_sr)?;
    let sas = sr.apply_right_dense(&sc.apply_left(&p.a)?);
    let core = sketched_core(&sc_c, &sas, &r_sr)?;
    let residual_fro = gmr_residual(&p.a, &p.c, &core, &p.r);
    Ok(GmrSolution {
        core,
        residual_fro,
        exact: false,
    })
}

fn check_rank(which: &'static str, original: &Mat, sketched: &Mat) -> Result<()> {
    let want = numerical_rank(original)?;
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

/// Residual-ratio diagnostic
/// `||A - P_C A P_R|| / (||(I - P_C) A P_R|| + ||P_C A (I - P_R)||)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoDiagnostic {
    /// `0` when the numerator vanishes, `+inf` when only the denominator does.
    pub rho: f64,
    pub numerator: f64,
    pub denominator: f64,
}

pub fn rho(p: &GmrProblem) -> Result<RhoDiagnostic> {
    let a = p.a.to_dense();
    let scale = a.norm();
    let uc = thin_svd(&p.c)?.u;
    let vr = thin_svd(&p.r)?.v;
    let avr = &a * &vr;
    let uta = uc.transpose() * &a;
    let core = uc.transpose() * &avr;
    let fit = &uc * &core * vr.transpose();
    let numerator = (&a - fit).norm();
    let denominator = (&avr - &uc * &core).norm() + (&uta - &core * vr.transpose()).norm();
    let rho = if numerator <= 1e-12 * scale {
        0.0
    } else if denominator <= 1e-12 * scale {
        f64::INFINITY
    } else {
        numerator / denominator
    };
    Ok(RhoDiagnostic {
        rho,
        numerator,
        denominator,
    })
}

fn check_square(x: &Mat) -> Result<()> {
    if x.nrows() != x.ncols() {
        return Err(Error::NotSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    Ok(())
}

/// Nearest symmetric matrix: `(X + X^T) / 2`.
pub fn project_symmetric(x: &Mat) -> Result<Mat> {
    check_square(x)?;
    Ok((x + x.transpose()) * 0.5)
}

/// Nearest PSD matrix: symmetrize, then zero the negative eigenvalues.
pub fn project_psd(x: &Mat) -> Result<Mat> {
    let sym = project_symmetric(x)?;
    if sym.is_empty() {
        return Ok(sym);
    }
    let mut eig = symmetric_eig(&sym)?;
    eig.values.iter_mut().for_each(|v| *v = v.max(0.0));
    // V D+ V^T is symmetric up to rounding; make it exact.
    let out = eig.reconstruct();
    Ok((&out + out.transpose()) * 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Symmetric,
    Psd,
}

/// Unprojected core `(S_1 C)^+ S_1 A S_2^T (C^T S_2^T)^+` for a square `A`.
pub fn sketched_symmetric_core(a: &MatrixHandle, c: &Mat, s1: &SketchOperator, s2: &SketchOperator) -> Result<Mat> {
    if a.rows() != a.cols() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if c.nrows() != n || s1.source_dim() != n || s2.source_dim() != n {
        return Err(dim_mismatch("solve_fast_symmetric", format!("dimension {n}"), "C or sketch of other size"));
    }
    let s1c = s1.apply_left_dense(c);
    let cs2 = s2.apply_right_dense(&c.transpose());
    check_rank("S_1 C", c, &s1c)?;
    check_rank("C^T S_2^T", c, &cs2.transpose())?;
    let sas = s2.apply_right_dense(&s1.apply_left(a)?);
    sketched_core(&s1c, &sas, &cs2)
}

/// Fast GMR for symmetric `A` and `R = C^T`, projected onto `cone`.
///
/// The two sketches must be independent, so equal seeds are rejected.
pub fn solve_fast_symmetric(
    a: &MatrixHandle,
    c: &Mat,
    s1_spec: &SketchSpec,
    s2_spec: &SketchSpec,
    cone: Cone,
) -> Result<GmrSolution> {
    if s1_spec.seed == s2_spec.seed {
        return Err(Error::InvalidSpec("symmetric fast GMR needs sketches with distinct seeds".into()));
    }
    let dense = a.to_dense();
    check_square(&dense)?;
    let asym = crate::matrix::asymmetry(&dense);
    if asym > SYMMETRY_TOL * dense.amax().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let s1 = SketchOperator::realize(s1_spec)?;
    let s2 = SketchOperator::realize(s2_spec)?;
    let raw = sketched_symmetric_core(a, c, &s1, &s2)?;
    let core = match cone {
        Cone::Symmetric => project_symmetric(&raw)?,
        Cone::Psd => project_psd(&raw)?,
    };
    let residual_fro = gmr_residual(a, c, &core, &c.transpose());
    Ok(GmrSolution {
        core,
        residual_fro,
        exact: false,
    })
}

/// `ceil(factor * max(c, r))`.
pub fn suggest_sketch_size(c: usize, r: usize, factor: f64) -> usize {
    (factor * c.max(r) as f64).ceil() as usize
}

/// `max(c / sqrt(eps), c / (eps rho^2))` with unit constant. `None` when
/// `rho == 0` (perfect fit: every core is optimal).
pub fn theorem_sketch_size(c: usize, epsilon: f64, rho: f64) -> Option<usize> {
    if rho == 0.0 {
        return None;
    }
    let c = c as f64;
    let a = c / epsilon.sqrt();
    let b = if rho.is_infinite() { 0.0 } else { c / (epsilon * rho * rho) };
    Some(a.max(b).ceil() as usize)
}
