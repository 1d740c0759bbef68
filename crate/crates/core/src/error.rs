use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("refraction index violates n >= 1 + delta on the domain (minimum {min} at ({x}, {y}))")]
    RefractionCondition { min: f64, x: f64, y: f64 },

    #[error("quadrature order {0} outside the supported range 1..=10")]
    QuadratureOrder(usize),

    #[error("point ({0}, {1}) lies outside the mesh")]
    OutsideMesh(f64, f64),

    #[error("fine space was not refined from the given coarse space")]
    NotNested,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is numerically singular at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("eigensolver did not converge after {restarts} restarts (best residuals {residuals:?})")]
    NoConvergence { restarts: usize, residuals: Vec<f64> },

    #[error("QR iteration failed to converge for the dense eigenproblem")]
    QrFailure,

    #[error("enrichment basis collapsed: {0}")]
    RankCollapse(String),

    #[error("eigenvalue matching failed: {0}")]
    Matching(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error stems from invalid input rather than a failed solve.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::RefractionCondition { .. } | Error::QuadratureOrder(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
