//! Crate-wide error type.

/// Errors produced by decompositions, solvers, and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input or intermediate value is NaN/Inf, or a computation would
    /// overflow the floating-point range.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Column or parameter index outside the valid range.
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    /// A zero discrete-time eigenvalue has no continuous-time counterpart.
    #[error("zero eigenvalue has no continuous-time logarithm")]
    ZeroEigenvalue,

    /// Matrix dimensions are inconsistent with each other.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The damped least-squares step could not be solved.
    #[error("singular system in damped least-squares step")]
    SingularSystem,

    /// Requested truncation rank exceeds the numerical rank of the data.
    #[error("requested rank {requested} exceeds available rank {available}")]
    RankTooLarge { requested: usize, available: usize },

    /// The backward propagator cannot be inverted.
    #[error("backward propagator is numerically singular")]
    SingularBackward,

    /// The exhaustive square-root sign search is capped.
    #[error("sign search over {0} eigenvalues exceeds the cap of {1}")]
    SearchCapExceeded(usize, usize),

    /// Total-least-squares DMD requires r < m/2.
    #[error("total-least-squares rank must satisfy r < m/2 (r = {r}, m = {m})")]
    RankConstraintViolated { r: usize, m: usize },

    /// The U11 block of the stacked-data basis is not invertible.
    #[error("leading block of the stacked-data basis is numerically singular")]
    SingularBlock,

    /// A spectrum of all-zero singular values admits no rank choice.
    #[error("all singular values are zero")]
    EmptySpectrum,

    /// Eigenvector matrix too ill-conditioned to define a matrix function.
    #[error("matrix is not numerically diagonalizable (eigenvector condition {0:.3e})")]
    NonDiagonalizable(f64),

    /// Two consecutive sample times coincide.
    #[error("time grid has a zero spacing between consecutive samples")]
    DegenerateGrid,

    /// Paired vectors have different lengths.
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    /// The snapshot matrix is identically zero.
    #[error("data matrix is identically zero")]
    ZeroData,

    /// A dense factorization failed to converge.
    #[error("matrix decomposition failed: {0}")]
    Backend(&'static str),

    /// Malformed CSV content.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    /// Sample times must be strictly increasing. For CSV input `position`
    /// is the 1-based file line of the offending row; for in-memory grids
    /// it is the vector index.
    #[error("sample times must be strictly increasing (position {position})")]
    NonMonotoneTime { position: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
