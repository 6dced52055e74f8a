use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid block spec: {0}")]
    InvalidSpec(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("data must be strictly positive, coordinate {index} is {value}")]
    NonPositiveData { index: usize, value: f64 },

    #[error("kernel of the design matrix is trivial; the unique solution is p = u")]
    TrivialKernel,

    #[error("codimension {codim} exceeds the desk-scale gate of {gate} ({paths} paths)")]
    AboveGate { codim: usize, gate: usize, paths: u128 },

    #[error("contraction requires at least two blocks")]
    SingleBlock,

    #[error("non-generic input: {0}")]
    NonGeneric(String),

    #[error("MLE fit did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NoConvergence { iterations: usize, grad_norm: f64 },

    #[error("Eulerian number A({n},{k}) is out of range")]
    EulerianRange { n: usize, k: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
