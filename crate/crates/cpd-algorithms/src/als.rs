use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};
use tensor_core::{gram_skip, mttkrp, relative_error, DenseTensor, KruskalModel};

use crate::{RunTrace, SolverError, SolverOptions, TraceRecord};

/// Solves one mode's least-squares system `U Gamma = G` for `U`, falling
/// back to a Tikhonov-regularized solve when `Gamma` is numerically rank
/// deficient. Returns the solution and whether regularization kicked in.
pub(crate) fn solve_mode_ls(
    g: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
) -> (DMatrix<f64>, bool) {
    if let Some(chol) = Cholesky::new(gamma.clone()) {
        let mut rhs = g.transpose();
        chol.solve_mut(&mut rhs);
        if rhs.iter().all(|v| v.is_finite()) {
            return (rhs.transpose(), false);
        }
    }
    let r = gamma.nrows();
    let ridge = 1e-12 * gamma.trace() / r as f64;
    let mut reg = gamma.clone();
    for i in 0..r {
        reg[(i, i)] += ridge.max(f64::MIN_POSITIVE);
    }
    let solved = reg
        .lu()
        .solve(&g.transpose())
        .unwrap_or_else(|| DMatrix::zeros(r, g.nrows()));
    (solved.transpose(), true)
}

/// Extracts column norms into weights, leaving unit (or canonical) columns.
fn renormalize_mode(factor: &mut DMatrix<f64>, weights: &mut DVector<f64>) {
    for r in 0..factor.ncols() {
        let nrm = factor.column(r).norm();
        if nrm == 0.0 {
            weights[r] = 0.0;
            let mut col = factor.column_mut(r);
            col.fill(0.0);
            col[0] = 1.0;
        } else {
            weights[r] = nrm;
            let mut col = factor.column_mut(r);
            col /= nrm;
        }
    }
}

/// Alternating least squares for the CP model.
///
/// Each sweep updates every mode in order through the fast MTTKRP kernel and
/// renormalizes the updated factor into the weights, so the squared residual
/// never increases from sweep to sweep.
pub fn als(
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
    let n_modes = t.order();
    let mut model = init.normalize();
    let mut trace = RunTrace::default();
    let mut prev_err = f64::INFINITY;
    let mut flat_count = 0usize;

    for sweep in 1..=opts.max_iters {
        let mut regularized = false;
        for n in 0..n_modes {
            let g = mttkrp(t, &model, n)?;
            let gamma = gram_skip(&model, n);
            let (mut updated, reg) = solve_mode_ls(&g, &gamma);
            regularized |= reg;
            let mut weights = model.weights().clone();
            renormalize_mode(&mut updated, &mut weights);
            model = model.with_factor(n, updated).with_weights(weights);
        }
        let rel = relative_error(t, &model)?;
        trace.push(TraceRecord {
            iter: sweep,
            rel_error: rel,
            eta_sq_norm: model.total_component_norm_sq(),
            mu: 0.0,
            lambda: 0.0,
            seconds: start.elapsed().as_secs_f64(),
            accepted: true,
            regularized,
            bound: None,
        });
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
    Ok((model, trace))
}
