use nalgebra::DVector;

use crate::{CalculusError, DampedHessian, StructuredHessian};

/// Applies the damped inverse once: `(H + mu I)^{-1} v` with the damping
/// stored on the Hessian.
pub fn inv_damped_hessian_apply(
    h: &StructuredHessian,
    v: &DVector<f64>,
) -> Result<DVector<f64>, CalculusError> {
    h.factorize(h.damping())?.solve(v)
}

/// Closed-form solution of the bordered KKT system
///
/// ```text
/// [ H + mu I   g_con ] [ d      ]   [ g_obj + lambda g_con ]
/// [ g_con'     0     ] [ dlambda] = -[ residual             ]
/// ```
///
/// as the pair `lambda_next = (residual - g_con' H^{-1} g_obj) /
/// (g_con' H^{-1} g_con)` and `d = -H^{-1}(g_obj + lambda_next g_con)`,
/// where `residual` is the current constraint violation.
pub fn solve_kkt_system(
    solver: &DampedHessian<'_>,
    g_obj: &DVector<f64>,
    g_con: &DVector<f64>,
    residual: f64,
) -> Result<(DVector<f64>, f64), CalculusError> {
    let y_obj = solver.solve(g_obj)?;
    let y_con = solver.solve(g_con)?;
    let denom = g_con.dot(&y_con);
    if !(denom.is_finite()) || denom <= 1e-300 {
        return Err(CalculusError::VanishingCurvature);
    }
    let lambda_next = (residual - g_con.dot(&y_obj)) / denom;
    let d = -(y_obj + y_con * lambda_next);
    Ok((d, lambda_next))
}
