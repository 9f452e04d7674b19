use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by how callers should react: `InvalidParameter`,
/// `DegenerateInput`, `EmptyInput` and `Parse` indicate bad inputs,
/// `EmbeddingFailure`, `Unstable`, `OptimizationFailure` and `NonFinite`
/// indicate numerical trouble, and the rest are I/O and format errors.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a documented invariant. The message names the
    /// first violated invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The circulant embedding of the target covariance produced an
    /// eigenvalue below the clamping tolerance.
    #[error("circulant embedding is not nonnegative definite: minimum eigenvalue {min_eigenvalue:e}")]
    EmbeddingFailure { min_eigenvalue: f64 },

    /// An integration scheme was asked to run outside its stability region.
    #[error("unstable configuration: {0}")]
    Unstable(String),

    /// The input series carries no usable signal (constant, too short, or
    /// otherwise outside an estimator's domain).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("empty input")]
    EmptyInput,

    /// A numerical search failed to produce a finite optimum.
    #[error("optimization failed: {0}")]
    OptimizationFailure(String),

    /// A non-finite value appeared where the computation requires finite
    /// numbers (activations, gradients, losses).
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// One or more trajectories of a batch failed. Carries (index, message)
    /// pairs for every failed trajectory.
    #[error("batch generation failed for {} trajectories, first failure at index {}: {}",
            .0.len(), .0.first().map(|f| f.0).unwrap_or(0), .0.first().map(|f| f.1.as_str()).unwrap_or(""))]
    BatchFailure(Vec<(u64, String)>),

    /// Text input could not be parsed. Row and column are one-based.
    #[error("parse error at row {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    /// A binary file does not match its declared format.
    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("unsupported format version {found} (this build reads version {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
