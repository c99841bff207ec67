use alloc::string::String;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("cannot build {requested} orthonormal vectors in dimension {dim}")]
    TooManyVectors { requested: usize, dim: usize },
    #[error("rank deficiency: vector {index} has residual norm {residual:e}")]
    RankDeficient { index: usize, residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("factor {factor} is degenerate: {reason}")]
    DegenerateFactor { factor: usize, reason: String },
    #[error("factor values are required by the factor-coded extractor but are missing")]
    MissingFactors,
    #[error("class {class} has no samples")]
    MissingClass { class: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
