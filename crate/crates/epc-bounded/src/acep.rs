use std::time::Instant;

use cpd_algorithms::{RunTrace, TraceRecord};
use nalgebra::{DMatrix, DVector};
use scqp::{solve_sphere, ScqpProblem};
use tensor_core::{gram_skip, mttkrp, residual_norm, DenseTensor, KruskalModel};

use crate::{EpcConfig, EpcError};

/// Eigendecomposition of a skip-mode Gram, eigenvalues descending and
/// floored at `1e-12` of the largest so collinear factors cannot produce a
/// singular scale.
pub(crate) fn gram_evd_descending(gamma: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let rank = gamma.nrows();
    let eig = gamma.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..rank).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let sigma_max = eig.eigenvalues[order[0]].max(f64::MIN_POSITIVE);
    let floor = 1e-12 * sigma_max;
    let sigma = DVector::from_fn(rank, |i, _| eig.eigenvalues[order[i]].max(floor));
    let mut v = DMatrix::zeros(rank, rank);
    for (i, &o) in order.iter().enumerate() {
        v.set_column(i, &eig.eigenvectors.column(o));
    }
    (sigma, v)
}

/// Replaces a weighted factor in the model, extracting column norms into
/// the weights.
pub(crate) fn set_weighted_factor(
    m: &KruskalModel,
    mode: usize,
    mut weighted: DMatrix<f64>,
) -> KruskalModel {
    let mut weights = m.weights().clone();
    for r in 0..weighted.ncols() {
        let nrm = weighted.column(r).norm();
        if nrm == 0.0 {
            weights[r] = 0.0;
            let mut col = weighted.column_mut(r);
            col.fill(0.0);
            col[0] = 1.0;
        } else {
            weights[r] = nrm;
            let mut col = weighted.column_mut(r);
            col /= nrm;
        }
    }
    m.clone().with_factor(mode, weighted).with_weights(weights)
}

/// One alternating correction step: replaces mode `n` with the matrix of
/// minimal Frobenius norm that keeps the fit error at `delta`.
///
/// The mode subproblem reduces, through the eigendecomposition of
/// `Gamma_{-n}`, to an R-dimensional sphere QP with linear coefficients
/// `sigma_r^{-3/2} ||f_r||`. A nonpositive reduced bound collapses the
/// update to the plain ALS step.
pub fn acep_mode_update(
    t: &DenseTensor,
    m: &KruskalModel,
    mode: usize,
    delta: f64,
) -> Result<KruskalModel, EpcError> {
    let norm_y_sq = t.norm_sq();
    if delta * delta >= norm_y_sq {
        // The zero model already satisfies the bound with minimal norm.
        let zero = DMatrix::zeros(m.factor(mode).nrows(), m.rank());
        return Ok(set_weighted_factor(m, mode, zero));
    }

    let g = mttkrp(t, m, mode)?;
    let gamma = gram_skip(m, mode);
    let (sigma, v) = gram_evd_descending(&gamma);
    let f_mat = &g * &v;
    let rank = m.rank();

    let fitted_energy: f64 = (0..rank)
        .map(|r| f_mat.column(r).norm_squared() / sigma[r])
        .sum();
    let delta_n_sq = delta * delta + fitted_energy - norm_y_sq;

    // Scale-relative clamp: at or below zero the constraint surface passes
    // through the least-squares point and the update is exactly ALS.
    let clamp_tol = 1e-12 * (delta * delta + fitted_energy.abs() + norm_y_sq);
    let weighted = if delta_n_sq <= clamp_tol {
        let mut ls = f_mat.clone();
        for (r, mut col) in ls.column_iter_mut().enumerate() {
            col /= sigma[r];
        }
        ls * v.transpose()
    } else {
        let delta_n = delta_n_sq.sqrt();
        let coeffs = DVector::from_fn(rank, |r, _| {
            f_mat.column(r).norm() / sigma[r].powf(1.5)
        });
        // min 0.5 z' diag(delta_n / sigma) z - c' z on the unit sphere;
        // sigma descending makes the quadratic coefficients ascending.
        let s_vec = DVector::from_fn(rank, |r, _| delta_n / sigma[r]);
        let problem = ScqpProblem::new(s_vec, -coeffs.clone(), 1.0)?;
        let sol = solve_sphere(&problem)?;

        let mut z = DMatrix::zeros(f_mat.nrows(), rank);
        for r in 0..rank {
            let f_norm = f_mat.column(r).norm();
            if f_norm > 0.0 {
                z.set_column(r, &(f_mat.column(r) * (sol.z[r] / f_norm)));
            } else {
                z[(0, r)] = sol.z[r];
            }
        }
        // U_eta = (F Sigma^-1/2 - delta_n Z) Sigma^-1/2 V'
        let mut combo = DMatrix::zeros(f_mat.nrows(), rank);
        for r in 0..rank {
            let scale = 1.0 / sigma[r].sqrt();
            let col = (f_mat.column(r) * scale - z.column(r) * delta_n) * scale;
            combo.set_column(r, &col);
        }
        combo * v.transpose()
    };
    Ok(set_weighted_factor(m, mode, weighted))
}

/// Alternating error preserving correction: cycles mode updates until the
/// rank-1 term norm stops improving.
///
/// Every iterate stays within the error bound while `sum eta_r^2` never
/// increases.
pub fn acep(
    t: &DenseTensor,
    init: &KruskalModel,
    cfg: &EpcConfig,
) -> Result<(KruskalModel, RunTrace), EpcError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut model = init.normalize();
    let residual = residual_norm(t, &model)?;
    if residual > cfg.delta * (1.0 + 1e-9) + 1e-14 * t.norm() {
        return Err(EpcError::InfeasibleStart {
            residual,
            delta: cfg.delta,
        });
    }

    let norm_y = t.norm();
    let mut trace = RunTrace::default();
    let mut prev_eta = model.total_component_norm_sq();
    for sweep in 1..=cfg.max_correction_iters {
        for n in 0..t.order() {
            model = acep_mode_update(t, &model, n, cfg.delta)?;
        }
        let eta = model.total_component_norm_sq();
        let rel = residual_norm(t, &model)? / norm_y;
        trace.push(TraceRecord {
            iter: sweep,
            rel_error: rel,
            eta_sq_norm: eta,
            mu: 0.0,
            lambda: 0.0,
            seconds: start.elapsed().as_secs_f64(),
            accepted: true,
            regularized: false,
            bound: Some(cfg.delta),
        });
        if (prev_eta - eta).abs() <= cfg.tol_eta_change * prev_eta.max(1.0) {
            trace.converged = true;
            break;
        }
        prev_eta = eta;
    }
    Ok((model, trace))
}
