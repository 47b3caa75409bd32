use std::time::Instant;

use cpd_algorithms::{RunTrace, TraceRecord};
use kruskal_calculus::{
    component_norm_sq, grad_component_norm_sq, grad_misfit_sq, misfit_sq, pack_factors,
    solve_kkt_system, CalculusError, ParamVector, StructuredHessian,
};
use nalgebra::DMatrix;
use tensor_core::{DenseTensor, KruskalModel};

use crate::{EpcConfig, EpcError};

const MU_GROW: f64 = 10.0;
const MU_SHRINK: f64 = 3.0;
const MU_OVERFLOW: f64 = 1e12;

/// All-at-once SQP for the error preserving correction: minimizes the
/// rank-1 term norm subject to the squared fit equalling `delta^2`.
///
/// Each iteration solves the bordered Newton system in closed form through
/// the structured damped inverse, rebalances the factors to equal column
/// norms, and accepts the step only if the norm objective drops while the
/// constraint violation stays within tolerance (or, from an infeasible
/// point, if the violation shrinks). The best feasible iterate is returned;
/// if no iterate ever became feasible the trace carries the stall flag.
pub fn scep(
    t: &DenseTensor,
    init: &KruskalModel,
    cfg: &EpcConfig,
) -> Result<(KruskalModel, RunTrace), EpcError> {
    cfg.validate()?;
    let start = Instant::now();
    let norm_y = t.norm();
    let delta_sq = cfg.delta * cfg.delta;
    let tol_c = cfg.tol_constraint * norm_y * norm_y;

    let dims = init.dims();
    let rank = init.rank();
    let mut factors: Vec<DMatrix<f64>> = init.balance().factors().to_vec();
    let mut lambda = 0.0f64;
    let mut obj = component_norm_sq(&factors);
    let mut fit = misfit_sq(t, &factors)?;

    let mut best: Option<(Vec<DMatrix<f64>>, f64)> = None;
    let mut consider_best = |factors: &[DMatrix<f64>], obj: f64, fit: f64,
                             best: &mut Option<(Vec<DMatrix<f64>>, f64)>| {
        if (fit - delta_sq).max(0.0) <= tol_c
            && best.as_ref().map(|(_, b)| obj < *b).unwrap_or(true)
        {
            *best = Some((factors.to_vec(), obj));
        }
    };
    consider_best(&factors, obj, fit, &mut best);

    let mut trace = RunTrace::default();
    let mut mu_floor: Option<f64> = None;
    let mut mu = 0.0;
    let mut prev_obj = f64::INFINITY;
    let mut flat = 0usize;

    for iter in 1..=cfg.sqp_iters {
        let g_obj = grad_component_norm_sq(&factors).into_vector();
        let g_con = grad_misfit_sq(t, &factors)?.into_vector();
        let residual = fit - delta_sq;

        let h = StructuredHessian::lagrangian(&factors, lambda);
        if mu_floor.is_none() {
            let seed = 1e-4 * h.mean_block_diagonal().max(f64::MIN_POSITIVE);
            mu = seed;
            mu_floor = Some(seed);
        }
        let mu0 = mu_floor.unwrap();

        let step = h.factorize(mu).and_then(|solver| {
            solve_kkt_system(&solver, &g_obj, &g_con, residual)
        });
        let mut accepted = false;
        match step {
            Ok((d, lambda_next)) => {
                let theta = pack_factors(&factors).into_vector() + &d;
                let candidate = ParamVector::from_vector(theta, &dims, rank)
                    .to_model()
                    .balance()
                    .factors()
                    .to_vec();
                let cand_obj = component_norm_sq(&candidate);
                let cand_fit = misfit_sq(t, &candidate)?;
                let viol_now = (fit - delta_sq).max(0.0);
                let viol_cand = (cand_fit - delta_sq).max(0.0);
                let improves_feasible = viol_cand <= tol_c && cand_obj < obj;
                let restores_feasibility = viol_now > tol_c && viol_cand < viol_now;
                if cand_obj.is_finite() && (improves_feasible || restores_feasibility) {
                    factors = candidate;
                    obj = cand_obj;
                    fit = cand_fit;
                    lambda = lambda_next;
                    accepted = true;
                }
            }
            Err(CalculusError::DampingTooSmall) | Err(CalculusError::VanishingCurvature) => {}
            Err(e) => return Err(e.into()),
        }

        if accepted {
            mu = (mu / MU_SHRINK).max(1e-14 * mu0);
        } else {
            mu *= MU_GROW;
        }
        consider_best(&factors, obj, fit, &mut best);

        trace.push(TraceRecord {
            iter,
            rel_error: fit.max(0.0).sqrt() / norm_y,
            eta_sq_norm: obj,
            mu,
            lambda,
            seconds: start.elapsed().as_secs_f64(),
            accepted,
            regularized: false,
            bound: Some(cfg.delta),
        });

        if !accepted && mu > MU_OVERFLOW * mu0 {
            trace.stalled = true;
            break;
        }
        if accepted {
            if (prev_obj - obj).abs() <= cfg.tol_eta_change * prev_obj.max(1.0) {
                flat += 1;
                if flat >= 3 {
                    trace.converged = true;
                    break;
                }
            } else {
                flat = 0;
            }
            prev_obj = obj;
        }
    }

    match best {
        Some((factors, _)) => {
            let model = KruskalModel::from_factors(factors)
                .expect("factor shapes preserved")
                .normalize();
            Ok((model, trace))
        }
        None => {
            // Never reached feasibility: hand back the final iterate flagged.
            trace.stalled = true;
            let model = KruskalModel::from_factors(factors)
                .expect("factor shapes preserved")
                .normalize();
            Ok((model, trace))
        }
    }
}
