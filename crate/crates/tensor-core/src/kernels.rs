use nalgebra::DMatrix;

use crate::{DenseTensor, KruskalModel, TensorError};

/// Mode-`n` matricization: rows are indexed by `i_n`, columns by the
/// remaining indices in increasing mode order (earlier modes fastest).
pub fn unfold(t: &DenseTensor, mode: usize) -> Result<DMatrix<f64>, TensorError> {
    let shape = t.shape();
    let order = shape.len();
    if mode >= order {
        return Err(TensorError::ModeOutOfRange { mode, order });
    }
    let rows = shape[mode];
    let cols = t.len() / rows;
    let mut out = DMatrix::zeros(rows, cols);

    let stride: usize = shape[..mode].iter().product();
    let block = stride * rows;
    // Linear index decomposes as inner + i_n*stride + outer*block where
    // inner < stride runs over the modes before n and outer over those after.
    for (linear, &value) in t.data().iter().enumerate() {
        let inner = linear % stride;
        let i_n = (linear / stride) % rows;
        let outer = linear / block;
        out[(i_n, inner + outer * stride)] = value;
    }
    Ok(out)
}

/// Inverse of [`unfold`]: rebuilds the tensor of `shape` from its mode-`n`
/// matricization.
pub fn fold(m: &DMatrix<f64>, mode: usize, shape: &[usize]) -> Result<DenseTensor, TensorError> {
    let order = shape.len();
    if mode >= order {
        return Err(TensorError::ModeOutOfRange { mode, order });
    }
    let total: usize = shape.iter().product();
    let rows = shape[mode];
    if m.nrows() != rows || m.ncols() != total / rows {
        return Err(TensorError::ShapeMismatch {
            context: format!(
                "matrix {}x{} cannot fold into {:?} along mode {}",
                m.nrows(),
                m.ncols(),
                shape,
                mode
            ),
        });
    }
    let stride: usize = shape[..mode].iter().product();
    let block = stride * rows;
    let mut data = vec![0.0; total];
    for (linear, value) in data.iter_mut().enumerate() {
        let inner = linear % stride;
        let i_n = (linear / stride) % rows;
        let outer = linear / block;
        *value = m[(i_n, inner + outer * stride)];
    }
    DenseTensor::new(shape.to_vec(), data)
}

/// Khatri-Rao product of all factors except `skip`, multiplied in decreasing
/// mode order. Column `r` is the first-mode-fastest vectorization of the
/// outer product of the `r`-th columns.
pub fn khatri_rao_skip(
    factors: &[DMatrix<f64>],
    skip: usize,
) -> Result<DMatrix<f64>, TensorError> {
    if skip >= factors.len() {
        return Err(TensorError::ModeOutOfRange {
            mode: skip,
            order: factors.len(),
        });
    }
    let rank = factors[skip].ncols();
    for (mode, f) in factors.iter().enumerate() {
        if f.ncols() != rank {
            return Err(TensorError::RankMismatch {
                context: format!("factor {} has {} columns, expected {}", mode, f.ncols(), rank),
            });
        }
    }
    let rows: usize = factors
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != skip)
        .map(|(_, f)| f.nrows())
        .product();
    let mut out = DMatrix::zeros(rows, rank);
    let mut buf: Vec<f64> = Vec::with_capacity(rows);
    for r in 0..rank {
        buf.clear();
        buf.push(1.0);
        for (k, f) in factors.iter().enumerate() {
            if k == skip {
                continue;
            }
            let col = f.column(r);
            let prev_len = buf.len();
            let mut next = Vec::with_capacity(prev_len * col.len());
            for &c in col.iter() {
                next.extend(buf[..prev_len].iter().map(|&b| b * c));
            }
            buf = next;
        }
        for (i, &v) in buf.iter().enumerate() {
            out[(i, r)] = v;
        }
    }
    Ok(out)
}

/// Matricized-tensor times Khatri-Rao product over raw factor matrices:
/// `G_n = Y_(n) * T_n` without materializing `T_n`.
///
/// Each column is obtained by contracting the tensor with one column of
/// every non-skipped factor, last mode first, which keeps every pass over
/// contiguous memory and costs about `2 R prod(I)` flops.
pub fn mttkrp_factors(
    t: &DenseTensor,
    factors: &[DMatrix<f64>],
    mode: usize,
) -> Result<DMatrix<f64>, TensorError> {
    let shape = t.shape();
    let order = shape.len();
    if mode >= order {
        return Err(TensorError::ModeOutOfRange { mode, order });
    }
    if factors.len() != order {
        return Err(TensorError::ShapeMismatch {
            context: format!("{} factors for order-{} tensor", factors.len(), order),
        });
    }
    let rank = factors[0].ncols();
    for (k, f) in factors.iter().enumerate() {
        if f.ncols() != rank {
            return Err(TensorError::RankMismatch {
                context: format!("factor {} has {} columns, expected {}", k, f.ncols(), rank),
            });
        }
        if k != mode && f.nrows() != shape[k] {
            return Err(TensorError::ShapeMismatch {
                context: format!(
                    "factor {} has {} rows, tensor extent is {}",
                    k,
                    f.nrows(),
                    shape[k]
                ),
            });
        }
    }

    let mut out = DMatrix::zeros(shape[mode], rank);
    let mut buf: Vec<f64> = Vec::with_capacity(t.len());
    let mut dims: Vec<usize> = Vec::with_capacity(order);
    for r in 0..rank {
        buf.clear();
        buf.extend_from_slice(t.data());
        dims.clear();
        dims.extend_from_slice(shape);
        for k in (0..order).rev() {
            if k == mode {
                continue;
            }
            contract_mode_in_place(&mut buf, &mut dims, k, factors[k].column(r).as_slice());
        }
        debug_assert_eq!(buf.len(), shape[mode]);
        for (i, &v) in buf.iter().enumerate() {
            out[(i, r)] = v;
        }
    }
    Ok(out)
}

/// MTTKRP over a model's factor matrices (weights are not applied).
pub fn mttkrp(
    t: &DenseTensor,
    m: &KruskalModel,
    mode: usize,
) -> Result<DMatrix<f64>, TensorError> {
    mttkrp_factors(t, m.factors(), mode)
}

/// Contracts mode `k` of the buffer with vector `v`, shrinking `dims[k]` to 1
/// and compacting the buffer.
fn contract_mode_in_place(buf: &mut Vec<f64>, dims: &mut Vec<usize>, k: usize, v: &[f64]) {
    let extent = dims[k];
    debug_assert_eq!(extent, v.len());
    let stride: usize = dims[..k].iter().product();
    let block = stride * extent;
    let outer = buf.len() / block;
    let mut write = 0;
    for o in 0..outer {
        let base = o * block;
        for inner in 0..stride {
            let mut acc = 0.0;
            for (i, &vi) in v.iter().enumerate() {
                acc += vi * buf[base + inner + i * stride];
            }
            buf[write] = acc;
            write += 1;
        }
    }
    buf.truncate(write);
    dims[k] = 1;
}

/// Hadamard product of the factor Grams over the given modes.
fn gram_hadamard(factors: &[DMatrix<f64>], skip: Option<usize>) -> DMatrix<f64> {
    let rank = factors[0].ncols();
    let mut gamma = DMatrix::from_element(rank, rank, 1.0);
    for (k, f) in factors.iter().enumerate() {
        if Some(k) == skip {
            continue;
        }
        let g = f.transpose() * f;
        gamma.component_mul_assign(&g);
    }
    gamma
}

/// `Gamma_{-n}`: Hadamard product of `U^(k)^T U^(k)` over all `k != n`.
pub fn gram_skip_factors(factors: &[DMatrix<f64>], skip: usize) -> DMatrix<f64> {
    gram_hadamard(factors, Some(skip))
}

/// `Gamma_{-n}` for a model's factors.
pub fn gram_skip(m: &KruskalModel, skip: usize) -> DMatrix<f64> {
    gram_hadamard(m.factors(), Some(skip))
}

/// Full Hadamard Gram over every mode: `Gamma = Gamma_{-n} .* (U^(n)^T U^(n))`.
pub fn gram_full(m: &KruskalModel) -> DMatrix<f64> {
    gram_hadamard(m.factors(), None)
}

/// Squared residual `||Y - Yhat||_F^2` through the trace expansion
/// `||Y||^2 + tr(A Gamma_{-n} A^T) - 2 tr(G_n A^T)` with the weights absorbed
/// into mode 0. Clamped at zero when cancellation drives it negative.
pub fn residual_norm_sq(t: &DenseTensor, m: &KruskalModel) -> Result<f64, TensorError> {
    if t.shape() != m.dims().as_slice() {
        return Err(TensorError::ShapeMismatch {
            context: format!("tensor {:?} vs model {:?}", t.shape(), m.dims()),
        });
    }
    let mode = 0;
    let g = mttkrp(t, m, mode)?;
    let gamma = gram_skip(m, mode);
    let a = m.weighted_factor(mode);
    let fit = (&a * &gamma).component_mul(&a).sum();
    let cross = g.component_mul(&a).sum();
    Ok((t.norm_sq() + fit - 2.0 * cross).max(0.0))
}

/// Residual norm `||Y - Yhat||_F` via the fast trace expansion.
pub fn residual_norm(t: &DenseTensor, m: &KruskalModel) -> Result<f64, TensorError> {
    residual_norm_sq(t, m).map(f64::sqrt)
}

/// Relative error `||Y - Yhat||_F / ||Y||_F`.
pub fn relative_error(t: &DenseTensor, m: &KruskalModel) -> Result<f64, TensorError> {
    let norm = t.norm();
    if norm == 0.0 {
        return Err(TensorError::ZeroNormTensor);
    }
    Ok(residual_norm(t, m)? / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn tensor_222() -> DenseTensor {
        // Entries enumerate the layout: value = linear index.
        DenseTensor::new(vec![2, 2, 2], (0..8).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn unfold_matrix_is_identity_and_transpose() {
        let m = DenseTensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let u0 = unfold(&m, 0).unwrap();
        assert_eq!(u0, DMatrix::from_column_slice(2, 3, m.data()));
        let u1 = unfold(&m, 1).unwrap();
        assert_eq!(u1, DMatrix::from_column_slice(2, 3, m.data()).transpose());
    }

    #[test]
    fn unfold_matches_index_map_oracle() {
        // Independent oracle: walk every (i, j, k) and place the element by
        // the unfolding definition directly.
        let t = tensor_222();
        for mode in 0..3 {
            let got = unfold(&t, mode).unwrap();
            let dims = [2usize, 2, 2];
            let mut expected = DMatrix::zeros(2, 4);
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let idx = [i, j, k];
                        let row = idx[mode];
                        let rest: Vec<usize> = (0..3).filter(|&m2| m2 != mode).collect();
                        let col = idx[rest[0]] + idx[rest[1]] * dims[rest[0]];
                        expected[(row, col)] = t.get(&idx);
                    }
                }
            }
            assert_eq!(got, expected, "mode {}", mode);
        }
    }

    #[test]
    fn fold_unfold_round_trip() {
        let t = tensor_222();
        for mode in 0..3 {
            let u = unfold(&t, mode).unwrap();
            let back = fold(&u, mode, t.shape()).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn unfold_mode_out_of_range() {
        let t = tensor_222();
        assert!(matches!(
            unfold(&t, 3),
            Err(TensorError::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn khatri_rao_two_factors_skip_second_returns_first() {
        let u = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let v = DMatrix::from_column_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        let t = khatri_rao_skip(&[u.clone(), v], 1).unwrap();
        assert_eq!(t, u);
    }

    #[test]
    fn khatri_rao_column_is_outer_product_vectorization() {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let b = DMatrix::from_column_slice(2, 1, &[3.0, 5.0]);
        let c = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 1.0]);
        let t = khatri_rao_skip(&[a, b, c], 2).unwrap();
        // Outer product a o b vectorized first mode fastest.
        let expected = DMatrix::from_column_slice(4, 1, &[3.0, 6.0, 5.0, 10.0]);
        assert_eq!(t, expected);
    }

    #[test]
    fn khatri_rao_all_ones() {
        let a = DMatrix::from_element(2, 2, 1.0);
        let b = DMatrix::from_element(3, 2, 1.0);
        let c = DMatrix::from_element(2, 2, 1.0);
        let t = khatri_rao_skip(&[a, b, c], 2).unwrap();
        assert_eq!(t, DMatrix::from_element(6, 2, 1.0));
    }

    #[test]
    fn khatri_rao_mismatched_ranks() {
        let a = DMatrix::from_element(2, 2, 1.0);
        let b = DMatrix::from_element(2, 3, 1.0);
        assert!(matches!(
            khatri_rao_skip(&[a, b], 0),
            Err(TensorError::RankMismatch { .. })
        ));
    }

    #[test]
    fn zero_tensor_mttkrp_is_zero() {
        let t = DenseTensor::zeros(vec![2, 3, 4]).unwrap();
        let factors = vec![
            DMatrix::from_element(2, 2, 1.0),
            DMatrix::from_element(3, 2, 1.0),
            DMatrix::from_element(4, 2, 1.0),
        ];
        let m = KruskalModel::from_factors(factors).unwrap();
        let g = mttkrp(&t, &m, 1).unwrap();
        assert_eq!(g, DMatrix::zeros(3, 2));
    }

    #[test]
    fn zero_weight_model_has_relative_error_one() {
        let factors = vec![
            DMatrix::from_element(2, 2, 0.5),
            DMatrix::from_element(3, 2, 0.5),
        ];
        let m = KruskalModel::new(DVector::zeros(2), factors).unwrap();
        let t = DenseTensor::new(vec![2, 3], vec![1.0; 6]).unwrap();
        let e = relative_error(&t, &m).unwrap();
        assert!((e - 1.0).abs() < 1e-14);
    }

    #[test]
    fn relative_error_rejects_zero_tensor() {
        let t = DenseTensor::zeros(vec![2, 2]).unwrap();
        let m = KruskalModel::from_factors(vec![
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::from_element(2, 1, 1.0),
        ])
        .unwrap();
        assert!(matches!(
            relative_error(&t, &m),
            Err(TensorError::ZeroNormTensor)
        ));
    }
}
