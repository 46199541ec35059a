use std::path::PathBuf;

/// Errors surfaced by the solver and its supporting kernels.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("Matrix Market parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported Matrix Market format: {0}")]
    UnsupportedFormat(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Every column of a block was dropped as numerically dependent.
    #[error("orthonormalization produced an empty block")]
    EmptyBlock,

    #[error("QZ iteration failed to converge after {sweeps} sweeps")]
    QzNoConvergence { sweeps: usize },

    /// The preconditioned residual block vanished, so the search space cannot grow.
    #[error("search block collapsed: the projected residual is numerically zero")]
    Stagnation,

    /// Both diagonal entries of a triangular pair vanish, or the test space lost rank.
    #[error("singular pencil: {0}")]
    SingularPencil(String),

    #[error("deficient eigenvalue at position {index}; eigenvectors do not exist, use the Schur variant")]
    Deficient { index: usize },

    #[error("preconditioner build failed: {0}")]
    PreconditionerBuild(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
