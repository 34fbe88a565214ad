use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("factorization did not converge")]
    IterationFailure,
    #[error("invalid sketch spec: {0}")]
    InvalidSpec(String),
    #[error("rank collapse in {which}: sketched rank {sketched} < original rank {original}")]
    RankCollapse {
        which: &'static str,
        sketched: usize,
        original: usize,
    },
    #[error("index ({i}, {j}) out of range for dimension {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("out-of-order block: expected column offset {expected}, got {got}")]
    OutOfOrderBlock { expected: usize, got: usize },
    #[error("stream is empty: no columns ingested")]
    EmptyStream,
    #[error("residual tail ||A - A_k||_F is numerically zero")]
    DegenerateTail,
    #[error("invalid matrix structure: {0}")]
    InvalidStructure(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid index at line {line}: {msg}")]
    Index { line: usize, msg: String },
    #[error("unsupported Matrix Market field or symmetry: {0}")]
    UnsupportedField(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dim_mismatch(
    op: &'static str,
    expected: impl ToString,
    got: impl ToString,
) -> Error {
    Error::DimensionMismatch {
        op,
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
