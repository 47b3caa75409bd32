//! Solvers that tame CP degeneracy by controlling the norm of the rank-1
//! terms.
//!
//! Two dual problem families are covered. Error preserving correction (EPC)
//! minimizes `sum_r eta_r^2` subject to the fit staying within a bound
//! `delta`, through an alternating scheme (`acep`) whose mode subproblems
//! collapse to R-dimensional sphere QPs, an all-at-once SQP (`scep`), and a
//! driver (`cpd_epc`) that interleaves corrections with ordinary fitting.
//! Bounded-norm CPD minimizes the fit subject to `||eta|| <= epsilon`,
//! alternating (`bals`) or via SQP with the roles of objective and
//! constraint exchanged (`bsqp`).

mod acep;
mod bals;
mod bsqp;
mod config;
mod driver;
mod error;
mod scep;

pub use acep::{acep, acep_mode_update};
pub use bals::{bals, bals_mode_update};
pub use bsqp::bsqp;
pub use config::{BoundConfig, CorrectionKind, EpcConfig};
pub use driver::cpd_epc;
pub use error::EpcError;
pub use scep::scep;
