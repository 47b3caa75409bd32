//! Baseline CP decomposition algorithms: alternating least squares with the
//! fast MTTKRP path, and a damped Gauss-Newton solver ("fLM") that exploits
//! the block-plus-low-rank Hessian structure. Both record per-iteration
//! traces consumed by the benchmark harness.

mod als;
mod error;
mod flm;
mod init;
mod options;
mod trace;

pub use als::als;
pub use error::SolverError;
pub use flm::flm;
pub use init::{identity_ones_init, random_init};
pub use options::SolverOptions;
pub use trace::{RunTrace, TraceRecord};
