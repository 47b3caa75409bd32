use crate::{solve_sphere, ScqpError, ScqpProblem, SphereSolution};

/// Minimizer of `0.5 z' diag(s) z + c' z` over `||z|| <= radius` for a
/// strictly convex objective (`s > 0`).
///
/// Returns the unconstrained stationary point `-c ./ s` with multiplier zero
/// whenever it lies inside the ball, and the sphere solution otherwise.
pub fn solve_ball(p: &ScqpProblem) -> Result<SphereSolution, ScqpError> {
    for (index, &value) in p.s().iter().enumerate() {
        if value <= 0.0 {
            return Err(ScqpError::NonPositiveCurvature { index, value });
        }
    }
    let interior = p.c().zip_map(p.s(), |c, s| -c / s);
    if interior.norm() <= p.radius() {
        return Ok(SphereSolution {
            z: interior,
            multiplier: 0.0,
        });
    }
    let sol = solve_sphere(p)?;
    debug_assert!(sol.multiplier >= -1e-12 * p.s()[0].abs().max(1.0));
    Ok(sol)
}
