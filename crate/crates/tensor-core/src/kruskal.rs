use nalgebra::{DMatrix, DVector};

use crate::{DenseTensor, TensorError};

/// Rank-R Kruskal model: weights `eta` plus one factor matrix per mode.
///
/// The represented tensor is `sum_r eta_r * u_r^(1) o ... o u_r^(N)`.
/// Columns are not required to be unit length; `normalize` and `balance`
/// move scale between the weights and the factors without changing the
/// represented tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct KruskalModel {
    weights: DVector<f64>,
    factors: Vec<DMatrix<f64>>,
}

impl KruskalModel {
    pub fn new(weights: DVector<f64>, factors: Vec<DMatrix<f64>>) -> Result<Self, TensorError> {
        if factors.is_empty() {
            return Err(TensorError::EmptyShape);
        }
        let rank = weights.len();
        if rank == 0 {
            return Err(TensorError::RankMismatch {
                context: "rank must be at least 1".to_string(),
            });
        }
        for (mode, f) in factors.iter().enumerate() {
            if f.ncols() != rank {
                return Err(TensorError::RankMismatch {
                    context: format!(
                        "factor {} has {} columns, expected {}",
                        mode,
                        f.ncols(),
                        rank
                    ),
                });
            }
            if f.nrows() == 0 {
                return Err(TensorError::ZeroExtent { mode });
            }
        }
        Ok(Self { weights, factors })
    }

    /// Model with all-one weights.
    pub fn from_factors(factors: Vec<DMatrix<f64>>) -> Result<Self, TensorError> {
        let rank = factors.first().map(|f| f.ncols()).unwrap_or(0);
        Self::new(DVector::from_element(rank, 1.0), factors)
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn factor(&self, mode: usize) -> &DMatrix<f64> {
        &self.factors[mode]
    }

    /// Replaces the factor of one mode, leaving weights untouched.
    pub fn with_factor(mut self, mode: usize, factor: DMatrix<f64>) -> Self {
        self.factors[mode] = factor;
        self
    }

    pub fn with_weights(mut self, weights: DVector<f64>) -> Self {
        debug_assert_eq!(weights.len(), self.rank());
        self.weights = weights;
        self
    }

    /// Factor of one mode with the weights absorbed: `U^(n) diag(eta)`.
    pub fn weighted_factor(&self, mode: usize) -> DMatrix<f64> {
        let mut f = self.factors[mode].clone();
        for (r, mut col) in f.column_iter_mut().enumerate() {
            col *= self.weights[r];
        }
        f
    }

    /// Squared norms of the rank-1 terms, `(eta_r * prod_n ||u_r^(n)||)^2`,
    /// valid for any internal scaling state.
    pub fn component_norms_sq(&self) -> DVector<f64> {
        let r = self.rank();
        DVector::from_fn(r, |i, _| {
            let mut t = self.weights[i].abs();
            for f in &self.factors {
                t *= f.column(i).norm();
            }
            t * t
        })
    }

    /// Sum of squared rank-1 term norms, `sum_r eta_r^2` after normalization.
    pub fn total_component_norm_sq(&self) -> f64 {
        self.component_norms_sq().sum()
    }

    /// Moves all scale into nonnegative weights and unit-norm columns.
    ///
    /// A zero column forces the corresponding weight to zero and is replaced
    /// by the first canonical basis vector so the result is deterministic.
    pub fn normalize(&self) -> KruskalModel {
        let rank = self.rank();
        let mut weights = self.weights.clone();
        let mut factors = self.factors.clone();
        for r in 0..rank {
            for f in factors.iter_mut() {
                let nrm = f.column(r).norm();
                if nrm == 0.0 {
                    weights[r] = 0.0;
                    let mut col = f.column_mut(r);
                    col.fill(0.0);
                    col[0] = 1.0;
                } else {
                    weights[r] *= nrm;
                    let mut col = f.column_mut(r);
                    col /= nrm;
                }
            }
            if weights[r] < 0.0 {
                weights[r] = -weights[r];
                let mut col = factors[0].column_mut(r);
                col.neg_mut();
            }
        }
        KruskalModel { weights, factors }
    }

    /// Folds the weights into the factors with equal column norms
    /// `eta_r^(1/N)` in every mode. Weights become all ones.
    pub fn balance(&self) -> KruskalModel {
        let rank = self.rank();
        let n_modes = self.order();
        let mut factors = self.factors.clone();
        for r in 0..rank {
            let mut total = self.weights[r].abs();
            let mut sign = if self.weights[r] < 0.0 { -1.0 } else { 1.0 };
            let norms: Vec<f64> = factors.iter().map(|f| f.column(r).norm()).collect();
            for &nrm in &norms {
                total *= nrm;
            }
            if total == 0.0 {
                for f in factors.iter_mut() {
                    f.column_mut(r).fill(0.0);
                }
                continue;
            }
            let target = total.powf(1.0 / n_modes as f64);
            for (f, &nrm) in factors.iter_mut().zip(norms.iter()) {
                let mut col = f.column_mut(r);
                col *= sign * target / nrm;
                sign = 1.0;
            }
        }
        KruskalModel {
            weights: DVector::from_element(rank, 1.0),
            factors,
        }
    }

    /// Dense tensor represented by the model.
    pub fn reconstruct(&self) -> DenseTensor {
        let dims = self.dims();
        let total: usize = dims.iter().product();
        let mut data = vec![0.0; total];
        let mut buf: Vec<f64> = Vec::with_capacity(total);
        for r in 0..self.rank() {
            // Progressive Kronecker product, first mode fastest.
            buf.clear();
            buf.extend(self.factors[0].column(r).iter().map(|v| v * self.weights[r]));
            for f in &self.factors[1..] {
                let col = f.column(r);
                let prev_len = buf.len();
                let mut next = Vec::with_capacity(prev_len * col.len());
                for &c in col.iter() {
                    next.extend(buf[..prev_len].iter().map(|&b| b * c));
                }
                buf = next;
            }
            for (d, b) in data.iter_mut().zip(buf.iter()) {
                *d += b;
            }
        }
        DenseTensor::new(dims, data).expect("reconstruction produced invalid tensor")
    }
}
