use thiserror::Error;

/// Errors raised by tensor construction and the multilinear kernels.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum TensorError {
    #[error("tensor must have at least one mode")]
    EmptyShape,

    #[error("extent of mode {mode} must be positive")]
    ZeroExtent { mode: usize },

    #[error("data length {got} does not match shape product {expected}")]
    DataLength { got: usize, expected: usize },

    #[error("non-finite value at linear index {index}")]
    NonFinite { index: usize },

    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("factor matrices must share a column count: {context}")]
    RankMismatch { context: String },

    #[error("relative error is undefined for a zero-norm tensor")]
    ZeroNormTensor,
}
