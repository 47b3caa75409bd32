use nalgebra::{DMatrix, DVector};
use tensor_core::{gram_skip_factors, mttkrp_factors, DenseTensor, KruskalModel};

use crate::{pack_factors, CalculusError, ParamVector};

/// Squared column norms of one factor: `beta_n(r) = u_r' u_r`.
pub(crate) fn column_norms_sq(factor: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(factor.ncols(), |r, _| factor.column(r).norm_squared())
}

/// Hadamard product of `beta_k` over all modes except `skip` (all modes when
/// `skip` is `None`).
pub(crate) fn beta_product(factors: &[DMatrix<f64>], skip: Option<usize>) -> DVector<f64> {
    let rank = factors[0].ncols();
    let mut out = DVector::from_element(rank, 1.0);
    for (k, f) in factors.iter().enumerate() {
        if Some(k) == skip {
            continue;
        }
        out.component_mul_assign(&column_norms_sq(f));
    }
    out
}

/// Sum of squared rank-1 term norms `f(theta) = sum_r prod_n ||u_r^(n)||^2`.
pub fn component_norm_sq(factors: &[DMatrix<f64>]) -> f64 {
    beta_product(factors, None).sum()
}

/// Gradient of [`component_norm_sq`]: mode-`n` block `2 U^(n) diag(beta_{-n})`.
pub fn grad_component_norm_sq(factors: &[DMatrix<f64>]) -> ParamVector {
    let blocks: Vec<DMatrix<f64>> = (0..factors.len())
        .map(|n| {
            let beta = beta_product(factors, Some(n));
            let mut g = factors[n].clone();
            for (r, mut col) in g.column_iter_mut().enumerate() {
                col *= 2.0 * beta[r];
            }
            g
        })
        .collect();
    pack_factors(&blocks)
}

/// Squared fit residual `c(theta) = ||Y - Yhat(theta)||_F^2`.
pub fn misfit_sq(t: &DenseTensor, factors: &[DMatrix<f64>]) -> Result<f64, CalculusError> {
    let model = KruskalModel::from_factors(factors.to_vec())
        .map_err(|e| CalculusError::ShapeMismatch(e.to_string()))?;
    tensor_core::residual_norm_sq(t, &model).map_err(|e| CalculusError::ShapeMismatch(e.to_string()))
}

/// Gradient of [`misfit_sq`]: mode-`n` block `2 (U^(n) Gamma_{-n} - G_n)`.
pub fn grad_misfit_sq(
    t: &DenseTensor,
    factors: &[DMatrix<f64>],
) -> Result<ParamVector, CalculusError> {
    let mut blocks = Vec::with_capacity(factors.len());
    for n in 0..factors.len() {
        let g_n = mttkrp_factors(t, factors, n)
            .map_err(|e| CalculusError::ShapeMismatch(e.to_string()))?;
        let gamma = gram_skip_factors(factors, n);
        blocks.push((&factors[n] * gamma - g_n) * 2.0);
    }
    Ok(pack_factors(&blocks))
}
