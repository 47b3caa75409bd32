use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),

    #[error(transparent)]
    Calculus(#[from] kruskal_calculus::CalculusError),

    #[error("initial model rank {got} does not match requested rank {expected}")]
    RankMismatch { got: usize, expected: usize },

    #[error("invalid solver option: {0}")]
    BadOptions(String),
}
