use std::time::Instant;

use kruskal_calculus::{
    component_norm_sq, grad_misfit_sq, misfit_sq, pack_factors, ParamVector, StructuredHessian,
};
use tensor_core::{DenseTensor, KruskalModel};

use crate::{RunTrace, SolverError, SolverOptions, TraceRecord};

/// Damping growth factor on a rejected step.
const MU_GROW: f64 = 10.0;
/// Damping shrink factor on an accepted step.
const MU_SHRINK: f64 = 3.0;
/// Stall when the damping exceeds this multiple of its starting value.
const MU_OVERFLOW: f64 = 1e12;

/// Damped Gauss-Newton ("fLM") solver for the plain or Tikhonov-regularized
/// CP objective.
///
/// Steps are `d = -(H_c + mu I)^{-1} g` with the structured fast inverse,
/// accepted only when the (regularized) squared residual decreases. On a
/// rejection the damping grows and the step is retried; when it overflows
/// the run is flagged as stalled, which is the degeneracy signature.
pub fn flm(
    t: &DenseTensor,
    init: &KruskalModel,
    opts: &SolverOptions,
) -> Result<(KruskalModel, RunTrace), SolverError> {
    opts.validate()?;
    if t.shape() != init.dims().as_slice() {
        return Err(SolverError::Tensor(tensor_core::TensorError::ShapeMismatch {
            context: format!("tensor {:?} vs init {:?}", t.shape(), init.dims()),
        }));
    }
    let start = Instant::now();
    let dims = init.dims();
    let rank = init.rank();
    let norm_y = t.norm();

    let mut factors = init.balance().factors().to_vec();
    let mut tikh = opts.tikhonov;
    let objective = |factors: &[nalgebra::DMatrix<f64>], tikh: f64| -> Result<f64, SolverError> {
        let c = misfit_sq(t, factors)?;
        if tikh > 0.0 {
            let sq: f64 = factors.iter().map(|f| f.norm_squared()).sum();
            Ok(c + 0.5 * tikh * sq)
        } else {
            Ok(c)
        }
    };

    let mut obj = objective(&factors, tikh)?;
    let mut trace = RunTrace::default();
    let mut mu_floor = None;
    let mut mu = 0.0;
    let mut prev_err = f64::INFINITY;
    let mut flat_count = 0usize;

    let mut iter = 0usize;
    while iter < opts.max_iters {
        iter += 1;
        let g_fit = grad_misfit_sq(t, &factors)?;
        let mut g = g_fit.into_vector();
        if tikh > 0.0 {
            g += pack_factors(&factors).into_vector() * tikh;
        }
        let c_now = misfit_sq(t, &factors)?;
        let rel_now = c_now.max(0.0).sqrt() / norm_y;
        if g.amax() <= 1e-13 * (1.0 + c_now) {
            trace.push(TraceRecord {
                iter,
                rel_error: rel_now,
                eta_sq_norm: component_norm_sq(&factors),
                mu,
                lambda: 0.0,
                seconds: start.elapsed().as_secs_f64(),
                accepted: false,
                regularized: tikh > 0.0,
                bound: None,
            });
            trace.converged = true;
            break;
        }

        let h = StructuredHessian::of_misfit(&factors);
        if mu_floor.is_none() {
            mu = opts.damping_init * h.mean_block_diagonal().max(f64::MIN_POSITIVE);
            mu_floor = Some(mu);
        }
        let mu0 = mu_floor.unwrap();

        let accepted = match h.factorize(mu + tikh) {
            Ok(solver) => match solver.solve(&g) {
                Ok(step) => {
                    let theta =
                        ParamVector::from_vector(pack_factors(&factors).into_vector() - step, &dims, rank);
                    let candidate = theta.to_model().balance().factors().to_vec();
                    let cand_obj = objective(&candidate, tikh)?;
                    if cand_obj.is_finite() && cand_obj < obj {
                        factors = candidate;
                        obj = cand_obj;
                        true
                    } else {
                        false
                    }
                }
                Err(_) => false,
            },
            Err(_) => false,
        };

        if accepted {
            mu = (mu / MU_SHRINK).max(1e-14 * mu0);
            tikh *= opts.tikhonov_decay;
        } else {
            mu *= MU_GROW;
        }

        let c_cur = misfit_sq(t, &factors)?;
        let rel = c_cur.max(0.0).sqrt() / norm_y;
        trace.push(TraceRecord {
            iter,
            rel_error: rel,
            eta_sq_norm: component_norm_sq(&factors),
            mu,
            lambda: 0.0,
            seconds: start.elapsed().as_secs_f64(),
            accepted,
            regularized: tikh > 0.0,
            bound: None,
        });

        if !accepted && mu > MU_OVERFLOW * mu0 {
            trace.stalled = true;
            break;
        }
        if accepted {
            if (prev_err - rel).abs() < opts.tol_rel_change {
                flat_count += 1;
                if flat_count >= opts.stall_window {
                    trace.converged = true;
                    break;
                }
            } else {
                flat_count = 0;
            }
            prev_err = rel;
            if rel <= 1e-15 {
                trace.converged = true;
                break;
            }
        }
    }

    let model = KruskalModel::from_factors(factors)
        .expect("factor shapes preserved")
        .normalize();
    Ok((model, trace))
}
