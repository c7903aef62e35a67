//! Crate-wide error type.

/// Errors produced by geometry kernels, the expression evaluator, and the
/// CLI layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A vector or matrix argument had the wrong dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Expression text could not be parsed. `offset` is a byte offset into
    /// the source string.
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// An identifier in an expression is not a known variable or constant.
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    /// Evaluation hit a point outside the domain of some operation
    /// (division by zero, `log` of a non-positive value, ...). `expr` is
    /// the offending subexpression, printed back as text.
    #[error("domain error evaluating `{expr}`: {message}")]
    Domain { expr: String, message: String },

    /// Geometric input is degenerate (zero vector where a direction is
    /// needed, singular metric, vanishing pedal scalar, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A run configuration failed schema validation. `path` is a
    /// JSON-pointer-style location inside the config document.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// A world sheet failed one of the admissibility checks.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
