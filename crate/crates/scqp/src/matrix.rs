use nalgebra::{DMatrix, DVector};

use crate::{solve_sphere, ScqpError, ScqpProblem};

/// Minimizer of `0.5 tr(X' Q X) + tr(B' X)` over `||X||_F = radius` for a
/// symmetric psd `Q` of size KxK and `B` of size KxR.
///
/// Rotating into the eigenbasis of `Q` makes every eigenvalue act
/// isotropically on a length-R row, so the problem collapses to a
/// K-dimensional sphere QP with linear coefficients `||B' u_i||`. Rows with
/// a vanishing coefficient follow the solver's deterministic hard-case rule
/// and point along the first coordinate.
pub fn solve_matrix_sphere(
    q: &DMatrix<f64>,
    b: &DMatrix<f64>,
    radius: f64,
) -> Result<DMatrix<f64>, ScqpError> {
    let k = q.nrows();
    if q.ncols() != k {
        return Err(ScqpError::Dimension(format!(
            "Q must be square, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    if b.nrows() != k {
        return Err(ScqpError::Dimension(format!(
            "B has {} rows, expected {}",
            b.nrows(),
            k
        )));
    }
    let scale = q.amax().max(1.0);
    let asym = (q - q.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(ScqpError::Asymmetric(asym));
    }

    let eig = q.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &bb| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[bb]));

    let r = b.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut rotated: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut coeffs = DVector::zeros(k);
    for (i, &o) in order.iter().enumerate() {
        // Deterministic eigenvector orientation: largest-magnitude entry
        // positive.
        let mut u = eig.eigenvectors.column(o).clone_owned();
        let mut pivot = 0;
        for j in 1..k {
            if u[j].abs() > u[pivot].abs() {
                pivot = j;
            }
        }
        if u[pivot] < 0.0 {
            u.neg_mut();
        }
        let bu = b.transpose() * &u;
        coeffs[i] = bu.norm();
        rotated.push(bu);
        basis.push(u);
    }

    let s = DVector::from_fn(k, |i, _| eig.eigenvalues[order[i]]);
    let problem = ScqpProblem::new(s, coeffs.clone(), radius)?;
    let sol = solve_sphere(&problem)?;

    // Row i of the rotated solution is (z_i / c_i) B' u_i when c_i > 0
    // (the reduced z_i carries the sign) and z_i e_1 otherwise.
    let mut x = DMatrix::zeros(k, r);
    for i in 0..k {
        let y_i: DVector<f64> = if coeffs[i] > 0.0 {
            &rotated[i] * (sol.z[i] / coeffs[i])
        } else {
            let mut e = DVector::zeros(r);
            e[0] = sol.z[i];
            e
        };
        // X += u_i * y_i'
        for col in 0..r {
            for row in 0..k {
                x[(row, col)] += basis[i][row] * y_i[col];
            }
        }
    }
    Ok(x)
}
