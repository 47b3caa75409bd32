//! Closed-form solvers for quadratic programs constrained to spheres and
//! balls, the identical-eigenvalue reduction, the matrix-variate extension,
//! and linear regression with a bound on the regression error.
//!
//! One sign convention is used throughout: every solver minimizes
//! `0.5 z' diag(s) z + c' z`. Problems stated with a `-2 c' z` linear term
//! map onto it by negating and scaling the linear coefficients, which leaves
//! the minimizer unchanged.
//!
//! All functions are pure and reentrant.

mod ball;
mod matrix;
mod problem;
mod reduce;
mod regression;
mod sphere;

pub use ball::solve_ball;
pub use matrix::solve_matrix_sphere;
pub use problem::{BoundedRegression, ScqpError, ScqpProblem};
pub use reduce::{reduce_identical, IdenticalGroups};
pub use regression::solve_bounded_regression;
pub use sphere::{solve_sphere, SphereSolution};
