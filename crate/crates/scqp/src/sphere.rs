use nalgebra::DVector;

use crate::{ScqpError, ScqpProblem};

/// Minimizer of a sphere-constrained diagonal QP together with its KKT
/// multiplier: `(diag(s) + lambda I) z = -c` with `diag(s) + lambda I` psd.
#[derive(Debug, Clone)]
pub struct SphereSolution {
    pub z: DVector<f64>,
    pub multiplier: f64,
}

/// Relative spread below which eigenvalues count as members of the smallest
/// eigenvalue group.
fn group_tol(s1: f64) -> f64 {
    1e-12 * s1.abs().max(1.0)
}

/// Global minimizer of `0.5 z' diag(s) z + c' z` over `||z|| = radius`.
///
/// The multiplier is the unique root of the secular equation
/// `sum_r c_r^2 / (s_r + lambda)^2 = radius^2` on `(-s_1, inf)`, found by
/// safeguarded Newton iteration on the reciprocal-norm form with a bisection
/// fallback. When the linear term vanishes on the smallest-eigenvalue
/// subspace and the remaining coordinates cannot absorb the whole radius,
/// the multiplier sticks at `-s_1` and the leftover norm is assigned to the
/// first coordinate of that subspace.
pub fn solve_sphere(p: &ScqpProblem) -> Result<SphereSolution, ScqpError> {
    let s = &p.s;
    let c = &p.c;
    let radius = p.radius;
    let k = s.len();
    let s1 = s[0];
    let tol = group_tol(s1);

    let group: Vec<usize> = (0..k).filter(|&r| s[r] - s1 <= tol).collect();
    let c_norm = c.norm();
    let c_group_norm: f64 = group.iter().map(|&r| c[r] * c[r]).sum::<f64>().sqrt();

    if c_group_norm <= 1e-14 * c_norm.max(1.0) {
        // Potential hard case: project out the smallest eigenvalue group.
        let mut d_sq = 0.0;
        let mut z = DVector::zeros(k);
        for r in 0..k {
            if s[r] - s1 <= tol {
                continue;
            }
            z[r] = -c[r] / (s[r] - s1);
            d_sq += z[r] * z[r];
        }
        if d_sq <= radius * radius {
            z[group[0]] = (radius * radius - d_sq).sqrt();
            return Ok(SphereSolution {
                z,
                multiplier: -s1,
            });
        }
    }

    // Secular root on (-s1, -s1 + ||c|| / radius].
    let norm_sq_at = |lambda: f64| -> f64 {
        (0..k)
            .map(|r| {
                let d = s[r] + lambda;
                let zr = c[r] / d;
                zr * zr
            })
            .sum()
    };
    let mut lo = -s1;
    let mut hi = -s1 + c_norm / radius;
    let target = radius * radius;
    let mut lambda = 0.5 * (lo + hi);
    let mut converged = false;
    for _ in 0..200 {
        let nsq = norm_sq_at(lambda);
        let phi = nsq - target;
        if phi.abs() <= 1e-13 * target {
            converged = true;
            break;
        }
        if phi > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        // Newton step on 1/radius - 1/||z(lambda)||, which is close to
        // linear in lambda; fall back to bisection when it leaves the
        // bracket.
        let n = nsq.sqrt();
        let dn_sq: f64 = (0..k)
            .map(|r| {
                let d = s[r] + lambda;
                -2.0 * c[r] * c[r] / (d * d * d)
            })
            .sum();
        let dpsi = -dn_sq / (2.0 * n * nsq);
        let psi = 1.0 / radius - 1.0 / n;
        let newton = lambda - psi / dpsi;
        lambda = if dpsi != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) <= f64::EPSILON * lambda.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        let phi = (norm_sq_at(lambda) - target).abs();
        if phi > 1e-10 * target {
            return Err(ScqpError::SecularDiverged);
        }
    }
    let z = DVector::from_fn(k, |r, _| -c[r] / (s[r] + lambda));
    Ok(SphereSolution {
        z,
        multiplier: lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn problem(s: &[f64], c: &[f64], radius: f64) -> ScqpProblem {
        ScqpProblem::new(
            DVector::from_column_slice(s),
            DVector::from_column_slice(c),
            radius,
        )
        .unwrap()
    }

    #[test]
    fn zero_linear_term_selects_smallest_eigenvector() {
        let sol = solve_sphere(&problem(&[1.0, 2.0], &[0.0, 0.0], 1.0)).unwrap();
        assert_eq!(sol.z, dvector![1.0, 0.0]);
        assert!((sol.multiplier + 1.0).abs() < 1e-14);
        let p = problem(&[1.0, 2.0], &[0.0, 0.0], 1.0);
        assert!((p.objective(&sol.z) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn isotropic_quadratic_points_against_linear_term() {
        let p = problem(&[1.0, 1.0], &[-1.0, 0.0], 1.0);
        let sol = solve_sphere(&p).unwrap();
        assert!((&sol.z - dvector![1.0, 0.0]).norm() < 1e-12);
        assert!((p.objective(&sol.z) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn hard_case_distributes_residual_norm_deterministically() {
        let p = problem(&[1.0, 10.0], &[0.0, -0.1], 1.0);
        let sol = solve_sphere(&p).unwrap();
        let z2 = 0.1 / 9.0;
        assert!((sol.multiplier + 1.0).abs() < 1e-14);
        assert!((sol.z[1] - z2).abs() < 1e-14);
        assert!((sol.z[0] - (1.0 - z2 * z2).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn generic_instance_satisfies_kkt_and_constraint() {
        let p = problem(&[1.0, 3.0], &[-0.6, -0.8], 1.0);
        let sol = solve_sphere(&p).unwrap();
        assert!((sol.z.norm() - 1.0).abs() < 1e-12);
        for r in 0..2 {
            let res = (p.s()[r] + sol.multiplier) * sol.z[r] + p.c()[r];
            assert!(res.abs() < 1e-10);
        }
        assert!(sol.multiplier > -1.0);
    }

    #[test]
    fn one_dimensional_problem() {
        let p = problem(&[2.0], &[3.0], 0.5);
        let sol = solve_sphere(&p).unwrap();
        assert!((sol.z[0] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn canonicalized_problem_has_same_minimizer() {
        let p = problem(&[-2.0, 0.5, 4.0], &[0.3, -1.2, 0.7], 2.5);
        let sol = solve_sphere(&p).unwrap();
        let (canon, map) = p.canonicalized();
        let sol_c = solve_sphere(&canon).unwrap();
        assert!((&sol.z - &sol_c.z).norm() < 1e-9);
        assert!((map.multiplier_back(sol_c.multiplier) - sol.multiplier).abs() < 1e-9);
    }

    #[test]
    fn rejects_unsorted_coefficients() {
        let err = ScqpProblem::new(dvector![2.0, 1.0], dvector![0.0, 0.0], 1.0);
        assert!(matches!(err, Err(ScqpError::NotAscending(1))));
    }
}
