use std::time::Instant;

use cpd_algorithms::{RunTrace, TraceRecord};
use nalgebra::{DMatrix, DVector};
use scqp::{solve_ball, ScqpProblem};
use tensor_core::{gram_skip, mttkrp, relative_error, DenseTensor, KruskalModel};

use crate::acep::set_weighted_factor;
use crate::{BoundConfig, EpcError};

/// One bounded-norm mode update: minimizes the fit over
/// `||U_eta^(n)||_F <= epsilon` with every other factor fixed.
///
/// Returns the updated model and the secular multiplier `lambda_tilde`; the
/// update equals `G_n (Gamma_{-n} - lambda_tilde I)^{-1}`, with
/// `lambda_tilde = 0` on the interior (plain ALS) branch.
pub fn bals_mode_update(
    t: &DenseTensor,
    m: &KruskalModel,
    mode: usize,
    epsilon: f64,
) -> Result<(KruskalModel, f64), EpcError> {
    let g = mttkrp(t, m, mode)?;
    let gamma = gram_skip(m, mode);
    let rank = m.rank();

    // Ascending eigenvalues, floored for collinear factors.
    let eig = gamma.symmetric_eigen();
    let mut order: Vec<usize> = (0..rank).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let sigma_max = eig.eigenvalues[order[rank - 1]].max(f64::MIN_POSITIVE);
    let floor = 1e-12 * sigma_max;
    let sigma = DVector::from_fn(rank, |i, _| eig.eigenvalues[order[i]].max(floor));
    let mut v = DMatrix::zeros(rank, rank);
    for (i, &o) in order.iter().enumerate() {
        v.set_column(i, &eig.eigenvectors.column(o));
    }

    let f_mat = &g * &v;
    let coeffs = DVector::from_fn(rank, |r, _| f_mat.column(r).norm());
    // min 0.5 z' diag(sigma) z - c' z over ||z|| <= epsilon.
    let problem = ScqpProblem::new(sigma.clone(), -coeffs.clone(), epsilon)?;
    let sol = solve_ball(&problem)?;

    let mut z = DMatrix::zeros(f_mat.nrows(), rank);
    for r in 0..rank {
        if coeffs[r] > 0.0 {
            z.set_column(r, &(f_mat.column(r) * (sol.z[r] / coeffs[r])));
        } else {
            z[(0, r)] = sol.z[r];
        }
    }
    let weighted = z * v.transpose();
    // Our multiplier solves (sigma + lambda) z = c; the regularized-ALS form
    // uses U = G (Gamma - lambda_tilde I)^{-1}, so lambda_tilde = -lambda.
    Ok((set_weighted_factor(m, mode, weighted), -sol.multiplier))
}

/// Alternating least squares with a bound on the rank-1 term norm.
///
/// With a generous bound every mode update is the interior (plain ALS)
/// solution; an active bound clips each update onto the sphere, which is the
/// Tikhonov-regularized ALS update with an automatically chosen coefficient.
pub fn bals(
    t: &DenseTensor,
    init: &KruskalModel,
    cfg: &BoundConfig,
) -> Result<(KruskalModel, RunTrace), EpcError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut model = init.normalize();
    let mut epsilon = cfg.epsilon;
    let mut trace = RunTrace::default();
    let mut window: Vec<f64> = Vec::new();
    let mut prev_rel = f64::INFINITY;
    let mut flat = 0usize;

    for sweep in 1..=cfg.max_iters {
        let mut lambda = 0.0;
        for n in 0..t.order() {
            let (next, lam) = bals_mode_update(t, &model, n, epsilon)?;
            model = next;
            lambda = lam;
        }
        let rel = relative_error(t, &model)?;
        let eta = model.total_component_norm_sq();
        debug_assert!(eta.sqrt() <= epsilon * (1.0 + 1e-10));
        trace.push(TraceRecord {
            iter: sweep,
            rel_error: rel,
            eta_sq_norm: eta,
            mu: 0.0,
            lambda,
            seconds: start.elapsed().as_secs_f64(),
            accepted: true,
            regularized: false,
            bound: Some(epsilon),
        });

        if cfg.adapt_bound {
            window.push(rel);
            if window.len() >= cfg.stall_window {
                let improvement = window[0] - rel;
                if improvement < cfg.stall_tol {
                    epsilon *= cfg.grow_factor;
                } else if improvement > 100.0 * cfg.stall_tol && rel < 1e-2 {
                    epsilon /= cfg.shrink_factor;
                }
                window.clear();
            }
        }

        if (prev_rel - rel).abs() < cfg.tol_rel_change {
            flat += 1;
            if flat >= cfg.stall_window {
                trace.converged = true;
                break;
            }
        } else {
            flat = 0;
        }
        prev_rel = rel;
        if rel <= 1e-15 {
            trace.converged = true;
            break;
        }
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cpd_algorithms::{als, random_init, SolverOptions};
    use nalgebra::Cholesky;

    #[test]
    fn huge_bound_reduces_to_plain_als() {
        let truth = random_init(&[4, 3, 3], 2, 9);
        let t = truth.reconstruct();
        let init = random_init(&[4, 3, 3], 2, 51);
        let cfg = BoundConfig {
            epsilon: 1e9,
            max_iters: 10,
            ..BoundConfig::default()
        };
        let (m_b, tr_b) = bals(&t, &init, &cfg).unwrap();
        let opts = SolverOptions::default().with_max_iters(10);
        let (m_a, tr_a) = als(&t, &init, &opts).unwrap();
        for (rb, ra) in tr_b.records.iter().zip(tr_a.records.iter()) {
            assert!(
                (rb.rel_error - ra.rel_error).abs() <= 1e-10 * (1.0 + ra.rel_error),
                "sweep {}: {} vs {}",
                rb.iter,
                rb.rel_error,
                ra.rel_error
            );
        }
        assert!(
            (m_b.weighted_factor(0) - m_a.weighted_factor(0)).norm()
                <= 1e-8 * m_a.weighted_factor(0).norm()
        );
    }

    #[test]
    fn active_bound_is_the_regularized_als_update() {
        let truth = random_init(&[4, 4, 4], 2, 11);
        let t = truth.reconstruct();
        let m = random_init(&[4, 4, 4], 2, 12).normalize();
        // Force the constraint active with a small bound.
        let epsilon = 0.25 * m.total_component_norm_sq().sqrt();
        let (updated, lambda_tilde) = bals_mode_update(&t, &m, 0, epsilon).unwrap();
        assert!(lambda_tilde < 0.0);
        let g = mttkrp(&t, &m, 0).unwrap();
        let mut gamma = gram_skip(&m, 0);
        for i in 0..2 {
            gamma[(i, i)] -= lambda_tilde;
        }
        let chol = Cholesky::new(gamma).unwrap();
        let mut rhs = g.transpose();
        chol.solve_mut(&mut rhs);
        let expected = rhs.transpose();
        let got = updated.weighted_factor(0);
        assert!(
            (&got - &expected).norm() <= 1e-8 * expected.norm(),
            "diff {}",
            (&got - &expected).norm()
        );
        assert!(got.norm() <= epsilon * (1.0 + 1e-10));
    }

    #[test]
    fn iterates_respect_the_bound_and_do_not_regress() {
        let truth = random_init(&[4, 4, 4], 3, 21);
        let t = truth.reconstruct();
        let init = random_init(&[4, 4, 4], 3, 22);
        let epsilon = 0.8 * init.normalize().total_component_norm_sq().sqrt();
        let cfg = BoundConfig {
            epsilon,
            max_iters: 40,
            ..BoundConfig::default()
        };
        let (_, trace) = bals(&t, &init, &cfg).unwrap();
        for r in &trace.records {
            assert!(r.eta_sq_norm.sqrt() <= epsilon * (1.0 + 1e-10));
        }
        for w in trace.records.windows(2) {
            assert!(w[1].rel_error <= w[0].rel_error + 1e-12);
        }
    }
}
