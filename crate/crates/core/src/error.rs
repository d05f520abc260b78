use alloc::string::String;

/// Errors raised by contract checks across the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid would have {nodes} nodes, limit is {limit}")]
    GridTooLarge { nodes: f64, limit: usize },
    #[error("functions live on different quadrature grids")]
    GridMismatch,
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("matrix or kernel is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("kernel is indefinite: eigenvalue {eigenvalue:e} below tolerance")]
    IndefiniteKernel { eigenvalue: f64 },
    #[error("symmetric eigensolver did not converge after {iterations} iterations")]
    EigenFailure { iterations: usize },
    #[error("basis value {value} at s-node {s_index} is outside [0, 1]")]
    BasisContract { value: f64, s_index: usize },
    #[error("operator is not positive semidefinite: <θ, Uθ> = {value:e}")]
    PsdViolation { value: f64 },
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("grid function is not a nondecreasing CDF")]
    NonMonotoneCdf,
    #[error("outcome {y} lies outside the outcome space")]
    OutcomeOutOfRange { y: f64 },
    #[error("dataset or pair list is empty")]
    Empty,
    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),
    #[error("infeasible coefficient density: {0}")]
    InfeasibleTheta(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Coarse category used for process exit codes.
    pub fn category(&self) -> u8 {
        match self {
            Error::InvalidArgument(_)
            | Error::GridTooLarge { .. }
            | Error::UnknownCatalog(_)
            | Error::InfeasibleTheta(_)
            | Error::Empty => 2,
            Error::EigenFailure { .. } => 5,
            _ => 4,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
