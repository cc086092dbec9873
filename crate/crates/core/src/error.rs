use thiserror::Error;

/// Errors produced by the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("group mismatch: {0}")]
    GroupMismatch(String),

    #[error("invalid generating set: {0}")]
    InvalidGenerators(String),

    #[error("ball cap exceeded: {count} elements at radius {radius} (cap {cap})")]
    CapExceeded { count: usize, radius: f64, cap: usize },

    #[error("dimension cap exceeded: {dim} > {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("length unavailable for {0}")]
    LengthUnavailable(String),

    #[error("degenerate polytope: generator images lie in the hyperplane {0}")]
    DegeneratePolytope(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("support exceeds ball: support radius {support} > ball radius {ball}")]
    SupportExceedsBall { support: f64, ball: f64 },

    #[error("empty compression: {0}")]
    EmptyCompression(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("non-hermitian operator: max deviation {0:e}")]
    NotHermitian(f64),

    #[error("not unitary: residual {0:e}")]
    NotUnitary(f64),

    #[error("inconsistent action: relator {relator} has residual {residual:e}")]
    InconsistentAction { relator: String, residual: f64 },

    #[error("not a subgroup: {0}")]
    NotSubgroup(String),

    #[error("degenerate triple: seminorm kernel has dimension {0} beyond the constants")]
    DegenerateTriple(usize),

    #[error("dimension too large for brute force: {dim} > {max}")]
    BruteForceDimension { dim: usize, max: usize },

    #[error("torsion element {0} generates a finite subgroup")]
    TorsionElement(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
