use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is singular (condition estimate {cond:e})")]
    Singular { cond: f64 },

    #[error("determinant overflows f64; use the log-magnitude form")]
    Overflow,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid vertex conditions: {0}")]
    InvalidConditions(String),

    #[error("matrix is not in SU(2): {0}")]
    NotSu2(String),

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("s outside the valid strip: {0}")]
    StripViolation(String),

    #[error("degenerate case: {0}")]
    Degenerate(String),

    #[error("could not verify root count: {0}")]
    Unverifiable(String),

    #[error("zero or pole on the counting contour after {attempts} perturbations")]
    BoundaryProximity { attempts: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
