use thiserror::Error;

/// Errors raised by the regression, testing, oracle and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("design matrix is rank deficient (numerical rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("degenerate residual at index {index}: squared residual is numerically zero")]
    DegenerateResidual { index: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid degrees of freedom: {0}")]
    InvalidDof(usize),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),

    #[error("unknown table `{0}`")]
    UnknownTable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
