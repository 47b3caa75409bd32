use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tensor_core::KruskalModel;

use crate::SolverError;

/// The identity-plus-ones initialization: each factor is `[I_I, 1, ...]`,
/// the I x I identity padded with all-ones columns up to the rank.
pub fn identity_ones_init(dims: &[usize], rank: usize) -> Result<KruskalModel, SolverError> {
    let factors: Vec<DMatrix<f64>> = dims
        .iter()
        .map(|&d| {
            DMatrix::from_fn(d, rank, |i, j| {
                if j < d {
                    if i == j {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    1.0
                }
            })
        })
        .collect();
    KruskalModel::from_factors(factors).map_err(SolverError::from)
}

/// Factors with i.i.d. standard Gaussian entries, deterministic per seed.
pub fn random_init(dims: &[usize], rank: usize, seed: u64) -> KruskalModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors: Vec<DMatrix<f64>> = dims
        .iter()
        .map(|&d| DMatrix::from_fn(d, rank, |_, _| rng.sample::<f64, _>(StandardNormal)))
        .collect();
    KruskalModel::from_factors(factors).expect("dims and rank are positive")
}
