use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max |M - M^†| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is {0} instead of 1")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("eigenvalue {0} lies on or next to the closed negative real axis; principal logarithm undefined")]
    BranchCut(Complex64),

    #[error("Schur decomposition failed to converge")]
    NoConvergence,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Hamiltonian has a single energy level; temperature is undefined")]
    FullyDegenerate,

    #[error("state has support on fewer than two energy levels; temperature fit impossible")]
    InsufficientSupport,

    #[error("log-population difference {0:e} too small for a spacing ratio")]
    DivisionHazard(f64),

    #[error("unsupported series order {0} (supported: 1, 2, 3)")]
    UnsupportedOrder(usize),

    #[error("fixed space contains no Hermitian unit-trace representative")]
    NoStateInFixedSpace,

    #[error("operator precondition violated: {0}")]
    Precondition(String),

    #[error("iteration did not converge within {0} steps")]
    NotConverged(usize),

    #[error("iteration left the physical region after {0} steps")]
    Diverged(usize),

    #[error("derivative has weight {0:e} on the kernel of the state")]
    UnsupportedDirection(f64),

    #[error("Fisher information is below the noise floor at every grid point")]
    NoInformation,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
