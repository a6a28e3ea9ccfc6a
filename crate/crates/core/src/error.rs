use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix data has {got} entries, expected {rows}x{cols}")]
    InvalidShape { rows: usize, cols: usize, got: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("{operation} requires a nonempty matrix, got {rows}x{cols}")]
    Empty {
        operation: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("{operation} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        operation: &'static str,
        rows: usize,
        cols: usize,
    },

    /// An iterative factorization ran out of its iteration budget.
    #[error("{operation} did not converge on a {rows}x{cols} matrix")]
    NoConvergence {
        operation: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("not an orthogonal projector: {0}")]
    NotAProjector(String),

    #[error("random subspace generation failed: {0}")]
    Generation(String),

    /// The affine subspaces have empty intersection (or the affine fixed-point
    /// equation has no solution).
    #[error("inconsistent affine problem: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    Inconsistent { residual: f64, tol: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A problem file could not be read or decoded.
    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerical kernels rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::NotAProjector(_) | Error::Generation(_)
        )
    }
}
