use thiserror::Error;

/// Errors raised by the solver suite.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PcsError {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("demand {index} ({source_vertex} -> {target}) has no feasible walk")]
    InfeasibleDemand {
        index: usize,
        source_vertex: usize,
        target: usize,
    },
    #[error("edge id {0} is not part of the instance")]
    UnknownEdge(usize),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("undefined quantity: {0}")]
    DivisionUndefined(String),
    #[error("no feasible walk within the hop cap of {cap} edges")]
    HopCapExceeded { cap: usize },
    #[error("size {size} exceeds the limit of {limit}")]
    ResourceLimit { size: usize, limit: usize },
    #[error("linear program error: {0}")]
    Lp(String),
    #[error("rounding connected no demand after {runs} runs")]
    RoundingFailure { runs: usize },
    #[error("oracle limit exceeded: {0}")]
    Scale(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, PcsError>;

impl PcsError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            PcsError::Parse { .. } | PcsError::InvalidInstance(_) | PcsError::Parameter(_) => 2,
            PcsError::InfeasibleDemand { .. } | PcsError::HopCapExceeded { .. } => 3,
            _ => 4,
        }
    }
}
