use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("point is not in the interior of the ball (normalized form value {0:e})")]
    NotInterior(f64),

    #[error("matrix does not preserve the Hermitian form (relative defect {0:e})")]
    NotFormPreserving(f64),

    #[error("matrix is not an element of U(n-1) ⋉ N: {0}")]
    NotHeisenberg(String),

    #[error(
        "rotation parts of generators {first} and {second} do not commute (defect {defect:e})"
    )]
    NonCommutingProjections {
        first: usize,
        second: usize,
        defect: f64,
    },

    #[error("insufficient data: {found} orbit points, at least {needed} required")]
    InsufficientData { found: usize, needed: usize },

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("degenerate direction: the direction point coincides with the base point")]
    DegenerateDirection,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigen-decomposition did not converge")]
    NoConvergence,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
