use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("conditioning on an atom with zero mass (atom {atom})")]
    DegenerateConditioning { atom: usize },

    #[error("dimension {dim} exceeds the enumeration cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("feasible set has no strictly positive point")]
    NoInteriorPoint,

    #[error("solver did not converge: {what}")]
    NonConvergence { what: String },

    #[error("agent {agent}: indirect utility reaches the utility's upper bound (unbounded_utility)")]
    UnboundedUtility { agent: usize },

    #[error("agent {agent}: martingale polytope empty, individual no-arbitrage fails")]
    EmptyPolytope { agent: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}
