//! Dense tensor storage and multilinear kernels for CP (CANDECOMP/PARAFAC)
//! decomposition solvers.
//!
//! The crate fixes one linearization convention and sticks to it everywhere:
//! elements are stored with the first index fastest (the column-major
//! generalization), the mode-`n` unfolding puts index `i_n` on rows and the
//! remaining indices in increasing mode order on columns, and the Khatri-Rao
//! product multiplies factors in decreasing mode order so that
//! `unfold(reconstruct(m), n) == U_eta^(n) * T_n^T` holds exactly.
//!
//! All operations are pure functions of their inputs; values are immutable
//! after construction and safe to share across threads.

mod error;
mod kernels;
mod kruskal;
mod tensor;

pub use error::TensorError;
pub use kernels::{
    fold, gram_full, gram_skip, gram_skip_factors, khatri_rao_skip, mttkrp, mttkrp_factors,
    relative_error, residual_norm, residual_norm_sq, unfold,
};
pub use kruskal::KruskalModel;
pub use tensor::DenseTensor;
