use nalgebra::DVector;

use crate::{solve_sphere, BoundedRegression, ScqpError, ScqpProblem};

/// Minimum-norm solution of `min ||x||  s.t.  ||y - A x|| <= delta`.
///
/// Returns zero when the bound already covers `||y||`, and signals
/// infeasibility when the bound lies below the residual of the unconstrained
/// least-squares fit. Otherwise the constraint is active and the problem is
/// reparameterized through the SVD of `A` into a unit-sphere QP. A rank
/// deficient `A` is handled by compressing onto its numerical column space.
pub fn solve_bounded_regression(p: &BoundedRegression) -> Result<DVector<f64>, ScqpError> {
    let a = &p.a;
    let y = &p.y;
    let delta = p.delta;
    let k = a.ncols();

    let y_norm = y.norm();
    if delta >= y_norm {
        return Ok(DVector::zeros(k));
    }

    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let sv = &svd.singular_values;
    let rank_tol = sv.max() * (a.nrows().max(k) as f64) * f64::EPSILON;
    let rank = sv.iter().filter(|&&s| s > rank_tol).count();
    if rank == 0 {
        // A is numerically zero and delta < ||y||.
        return Err(ScqpError::InfeasibleBound {
            delta,
            min_residual: y_norm,
        });
    }

    // Compressed coordinates on the column space.
    let y_hat = DVector::from_fn(rank, |i, _| u.column(i).dot(y));
    let perp_sq = (y_norm * y_norm - y_hat.norm_squared()).max(0.0);
    let perp = perp_sq.sqrt();
    if delta < perp * (1.0 - 1e-12) {
        return Err(ScqpError::InfeasibleBound {
            delta,
            min_residual: perp,
        });
    }
    let delta_hat = (delta * delta - perp_sq).max(0.0).sqrt();

    let x_from = |z: &DVector<f64>| -> DVector<f64> {
        // x = V diag(1/s) (y_hat - delta_hat z)
        let mut x = DVector::zeros(k);
        for i in 0..rank {
            let coef = (y_hat[i] - delta_hat * z[i]) / sv[i];
            for j in 0..k {
                x[j] += v_t[(i, j)] * coef;
            }
        }
        x
    };

    if delta_hat == 0.0 {
        // Bound equals the least-squares residual: the LS solution is forced.
        return Ok(x_from(&DVector::zeros(rank)));
    }

    // Sphere QP in z = (y_hat - diag(s) V' x) / delta_hat with ||z|| = 1:
    // min z' diag(delta_hat s^-2) z - 2 (s^-2 y_hat)' z.
    let s_q = DVector::from_fn(rank, |i, _| delta_hat / (sv[i] * sv[i]));
    let c_q = DVector::from_fn(rank, |i, _| -y_hat[i] / (sv[i] * sv[i]));
    let (problem, order) = ScqpProblem::new_sorted(s_q, c_q, 1.0)?;
    let sol = solve_sphere(&problem)?;
    let mut z = DVector::zeros(rank);
    for (sorted_pos, &orig) in order.iter().enumerate() {
        z[orig] = sol.z[sorted_pos];
    }
    Ok(x_from(&z))
}
