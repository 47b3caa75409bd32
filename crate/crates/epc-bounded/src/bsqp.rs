use std::time::Instant;

use cpd_algorithms::{RunTrace, TraceRecord};
use kruskal_calculus::{
    component_norm_sq, grad_component_norm_sq, grad_misfit_sq, misfit_sq, pack_factors,
    solve_kkt_system, CalculusError, ParamVector, StructuredHessian,
};
use nalgebra::{DMatrix, DVector};
use tensor_core::{DenseTensor, KruskalModel};

use crate::{BoundConfig, EpcError};

const MU_GROW: f64 = 10.0;
const MU_SHRINK: f64 = 3.0;
const MU_OVERFLOW: f64 = 1e12;

/// SQP for bounded-norm CPD: minimizes the squared fit subject to
/// `sum eta_r^2 <= epsilon^2`, the roles of objective and constraint
/// exchanged relative to the error preserving correction.
///
/// Each iteration first tries the unconstrained damped step; when the
/// linearized bound admits it, it is taken with the multiplier untouched.
/// Otherwise the equality-constrained bordered system is solved in closed
/// form (a negative multiplier dropping the constraint back to inactive).
/// The bound itself follows the configured grow-on-stall / shrink-on-trend
/// schedule, recorded in the trace.
pub fn bsqp(
    t: &DenseTensor,
    init: &KruskalModel,
    cfg: &BoundConfig,
) -> Result<(KruskalModel, RunTrace), EpcError> {
    cfg.validate()?;
    let start = Instant::now();
    let norm_y = t.norm();
    let dims = init.dims();
    let rank = init.rank();

    let mut factors: Vec<DMatrix<f64>> = init.balance().factors().to_vec();
    let mut lambda = 0.0f64;
    let mut epsilon = cfg.epsilon;
    let mut fit = misfit_sq(t, &factors)?;
    let mut obj_norm = component_norm_sq(&factors);

    let mut best: Option<(Vec<DMatrix<f64>>, f64)> = None;
    let mut trace = RunTrace::default();
    let mut mu_floor: Option<f64> = None;
    let mut mu = 0.0;
    let mut window: Vec<f64> = Vec::new();
    let mut prev_rel = f64::INFINITY;
    let mut flat = 0usize;

    for iter in 1..=cfg.max_iters {
        let eps_sq = epsilon * epsilon;
        let tol_f = cfg.tol_constraint * eps_sq;
        let g_fit = grad_misfit_sq(t, &factors)?.into_vector();
        let g_norm = grad_component_norm_sq(&factors).into_vector();

        let hessian = if lambda > 0.0 {
            StructuredHessian::swapped_lagrangian(&factors, lambda)
        } else {
            StructuredHessian::of_misfit(&factors)
        };
        if mu_floor.is_none() {
            let seed = 1e-4 * hessian.mean_block_diagonal().max(f64::MIN_POSITIVE);
            mu = seed;
            mu_floor = Some(seed);
        }
        let mu0 = mu_floor.unwrap();

        let proposal: Result<(DVector<f64>, f64), CalculusError> =
            hessian.factorize(mu).and_then(|solver| {
                // Unconstrained damped step on the Lagrangian gradient.
                let g_lag = &g_fit + &g_norm * lambda;
                let d_free = -(solver.solve(&g_lag)?);
                if obj_norm + g_norm.dot(&d_free) <= eps_sq {
                    return Ok((d_free, lambda));
                }
                // Equality-constrained step; a negative multiplier means the
                // bound is not active after all.
                let (d, lambda_next) =
                    solve_kkt_system(&solver, &g_fit, &g_norm, obj_norm - eps_sq)?;
                if lambda_next < 0.0 {
                    let d0 = -(solver.solve(&g_fit)?);
                    Ok((d0, 0.0))
                } else {
                    Ok((d, lambda_next))
                }
            });

        let mut accepted = false;
        match proposal {
            Ok((d, lambda_next)) => {
                let theta = pack_factors(&factors).into_vector() + &d;
                let candidate = ParamVector::from_vector(theta, &dims, rank)
                    .to_model()
                    .balance()
                    .factors()
                    .to_vec();
                let cand_fit = misfit_sq(t, &candidate)?;
                let cand_norm = component_norm_sq(&candidate);
                let viol_now = (obj_norm - eps_sq).max(0.0);
                let viol_cand = (cand_norm - eps_sq).max(0.0);
                let improves = viol_cand <= tol_f && cand_fit < fit;
                let restores = viol_now > tol_f && viol_cand < viol_now;
                if cand_fit.is_finite() && (improves || restores) {
                    factors = candidate;
                    fit = cand_fit;
                    obj_norm = cand_norm;
                    lambda = lambda_next.max(0.0);
                    accepted = true;
                }
            }
            Err(CalculusError::DampingTooSmall) | Err(CalculusError::VanishingCurvature) => {}
            Err(e) => return Err(e.into()),
        }

        if accepted {
            mu = (mu / MU_SHRINK).max(1e-14 * mu0);
            if (obj_norm - epsilon * epsilon).max(0.0) <= cfg.tol_constraint * epsilon * epsilon
                && best.as_ref().map(|(_, b)| fit < *b).unwrap_or(true)
            {
                best = Some((factors.clone(), fit));
            }
        } else {
            mu *= MU_GROW;
        }

        let rel = fit.max(0.0).sqrt() / norm_y;
        trace.push(TraceRecord {
            iter,
            rel_error: rel,
            eta_sq_norm: obj_norm,
            mu,
            lambda,
            seconds: start.elapsed().as_secs_f64(),
            accepted,
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

        if !accepted && mu > MU_OVERFLOW * mu0 {
            trace.stalled = true;
            break;
        }
        if accepted {
            if (prev_rel - rel).abs() < cfg.tol_rel_change {
                flat += 1;
                if flat >= cfg.stall_window.min(10) {
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
    }

    let final_factors = best.map(|(f, _)| f).unwrap_or(factors);
    let model = KruskalModel::from_factors(final_factors)
        .expect("factor shapes preserved")
        .normalize();
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cpd_algorithms::random_init;
    use tensor_core::relative_error;

    #[test]
    fn feasible_stationary_point_stays_put() {
        let truth = random_init(&[3, 3, 3], 2, 7);
        let t = truth.reconstruct();
        let eta = truth.normalize().total_component_norm_sq();
        let cfg = BoundConfig {
            epsilon: (eta * 4.0).sqrt(),
            max_iters: 10,
            ..BoundConfig::default()
        };
        let (out, _) = bsqp(&t, &truth, &cfg).unwrap();
        assert!(relative_error(&t, &out).unwrap() <= 1e-10);
    }

    #[test]
    fn kkt_residual_is_small_on_tiny_instances() {
        let truth = random_init(&[2, 2, 2], 2, 15);
        let t = truth.reconstruct();
        let init = random_init(&[2, 2, 2], 2, 16);
        // Make the bound comfortably feasible so the run converges to an
        // interior minimum with zero multiplier.
        let eta = truth.normalize().total_component_norm_sq();
        let cfg = BoundConfig {
            epsilon: (eta * 9.0).sqrt(),
            max_iters: 600,
            tol_rel_change: 1e-15,
            ..BoundConfig::default()
        };
        let (out, trace) = bsqp(&t, &init, &cfg).unwrap();
        let factors = out.balance().factors().to_vec();
        let g_fit = grad_misfit_sq(&t, &factors).unwrap().into_vector();
        let g_norm = grad_component_norm_sq(&factors).into_vector();
        let lambda = trace.records.last().unwrap().lambda;
        let kkt = (&g_fit + &g_norm * lambda).amax();
        assert!(kkt <= 1e-6 * (1.0 + t.norm_sq()), "KKT residual {kkt}");
        assert!(out.total_component_norm_sq().sqrt() <= cfg.epsilon * (1.0 + 1e-8));
    }

    #[test]
    fn iterates_respect_the_bound_within_tolerance() {
        let truth = random_init(&[4, 4, 4], 3, 2);
        let t = truth.reconstruct();
        let init = random_init(&[4, 4, 4], 3, 5);
        let epsilon = 0.9 * init.normalize().total_component_norm_sq().sqrt();
        let cfg = BoundConfig {
            epsilon,
            max_iters: 80,
            ..BoundConfig::default()
        };
        let (_, trace) = bsqp(&t, &init, &cfg).unwrap();
        for r in trace.records.iter().filter(|r| r.accepted) {
            let eps = r.bound.unwrap();
            assert!(
                (r.eta_sq_norm - eps * eps).max(0.0) <= 1e-8 * eps * eps,
                "iterate violates the bound: {} vs {}",
                r.eta_sq_norm,
                eps * eps
            );
        }
    }
}
