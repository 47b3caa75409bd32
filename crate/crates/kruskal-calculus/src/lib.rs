//! Calculus of the two functions driving norm-corrected CP decomposition:
//! the rank-1-norm objective `f(theta) = sum_r prod_n ||u_r^(n)||^2` and the
//! fit constraint `c(theta) = ||Y - Yhat(theta)||_F^2`, both over the raw
//! (unit-length relaxed) factor parameterization
//! `theta = [vec(U^(1)); ...; vec(U^(N))]`.
//!
//! Gradients carry their true scale (they match finite differences). The
//! Hessian of `c` is the Gauss-Newton part; second-order residual terms are
//! dropped, which is exactly the structure that admits the
//! block-diagonal-plus-low-rank factored form and its fast damped inverse.
//! Hessians are held in factored form; nothing here ever builds the dense
//! parameter-space matrix except [`StructuredHessian::materialize`], which
//! exists for small test instances.

mod error;
mod hessian;
mod kkt;
mod params;
mod perm;
mod values;

pub use error::CalculusError;
pub use hessian::{DampedHessian, StructuredHessian};
pub use kkt::{inv_damped_hessian_apply, solve_kkt_system};
pub use params::{pack_factors, ParamVector};
pub use perm::vec_transpose_perm;
pub use values::{
    component_norm_sq, grad_component_norm_sq, grad_misfit_sq, misfit_sq,
};
