/// Error type shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The supplied quadrature rule cannot resolve the requested computation.
    #[error("quadrature rule too coarse: {0}")]
    QuadratureTooCoarse(String),

    /// Cholesky factorization hit a non-positive pivot. For Gram matrices this
    /// signals a rule too coarse for the integrand (or a wildly unbounded φ),
    /// not a bug in the matrix itself, which is positive definite in exact
    /// arithmetic.
    #[error("Cholesky failed at pivot {pivot}: value {value:.6e} (matrix not numerically positive definite; refine the quadrature rule)")]
    Cholesky { pivot: usize, value: f64 },

    /// Vector/rule lengths disagree.
    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    /// Argument outside an operation's documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The dense eigensolver gave up (repeated failures across retries).
    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),
}
