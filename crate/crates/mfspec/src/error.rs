use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("transition matrix is not irreducible: state {to} is unreachable from state {from}")]
    NotIrreducible { from: usize, to: usize },
    #[error("symbol {symbol} has no allowed successor")]
    EmptyRow { symbol: usize },
    #[error("symbol {symbol} has no allowed predecessor")]
    EmptyColumn { symbol: usize },
    #[error("admissible word count {needed} exceeds cap {cap}")]
    ResourceLimit { needed: u128, cap: u64 },
    #[error("word of length {word_len} is too short; need at least {needed} symbols")]
    DepthMismatch { word_len: usize, needed: usize },
    #[error("iteration did not converge: {what}")]
    NonConvergence { what: &'static str },
    #[error("ratio denominators violate the admissibility condition on cycle `{witness}` (component {component})")]
    ConditionQViolated { witness: String, component: usize },
    #[error("weight function violates the cover condition")]
    ConditionPViolated,
    #[error("transition structure is not an irreducible Markov coding")]
    NotMarkov,
    #[error("level {alpha} coincides with the value at the indifferent fixed point")]
    ExcludedAlpha { alpha: f64 },
    #[error("no measure of the requested order satisfies the level constraint")]
    Infeasible,
    #[error("level {alpha:?} lies within tolerance of the domain boundary")]
    BoundaryUnresolved { alpha: Vec<f64> },
    #[error("unknown closed form `{0}`")]
    UnknownFormula(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
