use nalgebra::{Cholesky, DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tensor_core::{DenseTensor, KruskalModel};

use crate::config::{CollinearitySpec, ExperimentConfig, Scenario, WeightScheme};
use crate::matmul::{gen_matmul_tensor, MatmulSpec};
use crate::{split_seed, HarnessError};

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Builds the target Gram of the collinear block.
fn target_gram(
    rng: &mut ChaCha8Rng,
    block: usize,
    corr: &CollinearitySpec,
) -> DMatrix<f64> {
    let mut c = DMatrix::identity(block, block);
    for i in 0..block {
        for j in (i + 1)..block {
            let v = match corr {
                CollinearitySpec::Value(v) => *v,
                CollinearitySpec::Range(lo, hi) => rng.random_range(*lo..=*hi),
            };
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// One factor matrix whose leading `block` columns realize the requested
/// pairwise inner products exactly; the remaining columns are i.i.d.
/// unit-normalized Gaussian.
///
/// The block is built as `Q L'` where `Q` is a random orthonormal basis and
/// `L L' = C` is the Cholesky factor of the target Gram, so `U' U = C` by
/// construction. A Gram that is not positive definite is rejected with its
/// smallest eigenvalue (range sampling retries a few draws first).
pub fn gen_collinear_factors(
    extent: usize,
    rank: usize,
    corr: &CollinearitySpec,
    block: usize,
    seed: u64,
) -> Result<DMatrix<f64>, HarnessError> {
    if block > extent {
        return Err(HarnessError::BadConfig(format!(
            "collinear block {block} exceeds the mode extent {extent}"
        )));
    }
    if block > rank {
        return Err(HarnessError::BadConfig(format!(
            "collinear block {block} exceeds the rank {rank}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let retries = match corr {
        CollinearitySpec::Value(_) => 1,
        CollinearitySpec::Range(..) => 100,
    };
    let mut chol = None;
    let mut last_gram = None;
    for _ in 0..retries {
        let c = target_gram(&mut rng, block, corr);
        match Cholesky::new(c.clone()) {
            Some(ch) => {
                chol = Some(ch);
                break;
            }
            None => last_gram = Some(c),
        }
    }
    let chol = match chol {
        Some(ch) => ch,
        None => {
            let min_eig = last_gram
                .map(|c| c.symmetric_eigen().eigenvalues.min())
                .unwrap_or(f64::NAN);
            return Err(HarnessError::InfeasibleGram { min_eig });
        }
    };

    let basis = gaussian_matrix(&mut rng, extent, block);
    let q = basis.qr().q();
    let block_cols = q * chol.l().transpose();

    let mut factor = DMatrix::zeros(extent, rank);
    factor.view_mut((0, 0), (extent, block)).copy_from(&block_cols);
    for r in block..rank {
        let mut col = DVector::from_fn(extent, |_, _| rng.sample::<f64, _>(StandardNormal));
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= nrm;
        } else {
            col[0] = 1.0;
        }
        factor.set_column(r, &col);
    }
    Ok(factor)
}

fn weights_for(scheme: &WeightScheme, rank: usize) -> Result<DVector<f64>, HarnessError> {
    match scheme {
        WeightScheme::Unit => Ok(DVector::from_element(rank, 1.0)),
        WeightScheme::TimesTen => {
            Ok(DVector::from_fn(rank, |r, _| 10.0 * (r + 1) as f64))
        }
        WeightScheme::Custom(v) => {
            if v.len() != rank {
                return Err(HarnessError::BadConfig(format!(
                    "{} custom weights for rank {}",
                    v.len(),
                    rank
                )));
            }
            Ok(DVector::from_column_slice(v))
        }
    }
}

fn collinear_model(
    dims: &[usize],
    rank: usize,
    corr: &CollinearitySpec,
    block: usize,
    weights: &WeightScheme,
    seed: u64,
) -> Result<KruskalModel, HarnessError> {
    let factors = dims
        .iter()
        .enumerate()
        .map(|(n, &d)| gen_collinear_factors(d, rank, corr, block, split_seed(seed, n as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let w = weights_for(weights, rank)?;
    Ok(KruskalModel::new(w, factors)?)
}

/// Two concatenated collinear blocks, each of full block rank.
fn block_model(
    dims: &[usize],
    block_rank: usize,
    corr: &CollinearitySpec,
    seed: u64,
) -> Result<KruskalModel, HarnessError> {
    let rank = 2 * block_rank;
    let mut factors = Vec::with_capacity(dims.len());
    for (n, &d) in dims.iter().enumerate() {
        let mut f = DMatrix::zeros(d, rank);
        for b in 0..2 {
            let sub = gen_collinear_factors(
                d,
                block_rank,
                corr,
                block_rank,
                split_seed(seed, (10 * (b + 1) + n) as u64),
            )?;
            f.view_mut((0, b * block_rank), (d, block_rank)).copy_from(&sub);
        }
        factors.push(f);
    }
    Ok(KruskalModel::new(
        DVector::from_element(rank, 1.0),
        factors,
    )?)
}

/// Noise-free scenario tensor together with its generating model.
///
/// For the matrix-multiplication scenario the "model" is a rank-`m*n*p`
/// expansion of the exact tensor (one rank-1 term per unit entry), returned
/// so callers can reason about shapes; solvers target lower ranks.
pub fn gen_paper_tensor(
    cfg: &ExperimentConfig,
) -> Result<(DenseTensor, KruskalModel), HarnessError> {
    let seed = cfg.rng_seed;
    match cfg.scenario {
        Scenario::Ex1 | Scenario::Ex2 => {
            let dims = cubic_dims(cfg, 4)?;
            let rank = if cfg.rank > 0 { cfg.rank } else { 5 };
            let corr = cfg
                .collinearity
                .clone()
                .unwrap_or(CollinearitySpec::Value(0.99));
            let block = cfg.collinear_block.unwrap_or(dims[0].min(rank));
            let weights = cfg.weights.clone().unwrap_or(WeightScheme::Unit);
            let model = collinear_model(&dims, rank, &corr, block, &weights, seed)?;
            Ok((model.reconstruct(), model))
        }
        Scenario::Ex1b => {
            let dims = cubic_dims(cfg, 4)?;
            let rank = if cfg.rank > 0 { cfg.rank } else { 5 };
            let corr = cfg
                .collinearity
                .clone()
                .unwrap_or(CollinearitySpec::Value(0.99));
            let block = cfg.collinear_block.unwrap_or(dims[0].min(rank));
            let weights = cfg.weights.clone().unwrap_or(WeightScheme::TimesTen);
            let model = collinear_model(&dims, rank, &corr, block, &weights, seed)?;
            Ok((model.reconstruct(), model))
        }
        Scenario::Ex4 => {
            let dims = cubic_dims(cfg, 4)?;
            let rank = if cfg.rank > 0 {
                cfg.rank
            } else {
                match dims[0] {
                    4 => 5,
                    7 => 10,
                    12 => 15,
                    d => d + 1,
                }
            };
            let corr = cfg
                .collinearity
                .clone()
                .unwrap_or(CollinearitySpec::Value(0.99));
            let block = cfg.collinear_block.unwrap_or(dims[0].min(rank));
            let weights = cfg.weights.clone().unwrap_or(WeightScheme::Unit);
            let model = collinear_model(&dims, rank, &corr, block, &weights, seed)?;
            Ok((model.reconstruct(), model))
        }
        Scenario::ExBcd => {
            let dims = cubic_dims(cfg, 6)?;
            let corr = cfg
                .collinearity
                .clone()
                .unwrap_or(CollinearitySpec::Range(0.95, 0.999));
            let model = block_model(&dims, dims[0], &corr, seed)?;
            Ok((model.reconstruct(), model))
        }
        Scenario::ExMatmul => {
            let (m, n, p) = cfg.matmul.unwrap_or((3, 3, 3));
            let spec = MatmulSpec::new(m, n, p)?;
            let tensor = gen_matmul_tensor(&spec);
            let model = spec.unit_expansion();
            Ok((tensor, model))
        }
        Scenario::Custom => {
            if cfg.dims.is_empty() {
                return Err(HarnessError::BadConfig(
                    "custom scenario requires dims".into(),
                ));
            }
            let rank = cfg.rank;
            let corr = cfg.collinearity.clone().unwrap_or(CollinearitySpec::Value(0.0));
            let block = cfg.collinear_block.unwrap_or(0);
            let weights = cfg.weights.clone().unwrap_or(WeightScheme::Unit);
            let model = if block >= 2 {
                collinear_model(&cfg.dims, rank, &corr, block, &weights, seed)?
            } else {
                let factors = cfg
                    .dims
                    .iter()
                    .enumerate()
                    .map(|(n, &d)| {
                        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, n as u64));
                        let mut f = gaussian_matrix(&mut rng, d, rank);
                        for mut col in f.column_iter_mut() {
                            let nrm = col.norm();
                            if nrm > 0.0 {
                                col /= nrm;
                            }
                        }
                        f
                    })
                    .collect();
                KruskalModel::new(weights_for(&weights, rank)?, factors)?
            };
            Ok((model.reconstruct(), model))
        }
    }
}

fn cubic_dims(cfg: &ExperimentConfig, default: usize) -> Result<Vec<usize>, HarnessError> {
    match cfg.dims.len() {
        0 => Ok(vec![default; 3]),
        1 => Ok(vec![cfg.dims[0]; 3]),
        3 => Ok(cfg.dims.clone()),
        n => Err(HarnessError::BadConfig(format!(
            "expected 0, 1 or 3 dims, got {n}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::PipelineSpec;

    fn base_config(scenario: Scenario) -> ExperimentConfig {
        ExperimentConfig {
            scenario,
            dims: vec![],
            rank: 0,
            collinearity: None,
            collinear_block: None,
            weights: None,
            matmul: None,
            pipelines: vec![PipelineSpec::parse("als", "p").unwrap()],
            num_trials: 1,
            snr_db: None,
            rng_seed: 7,
            init: None,
            output: None,
            traces_dir: None,
        }
    }

    #[test]
    fn zero_correlation_gives_an_orthonormal_block() {
        let f = gen_collinear_factors(5, 3, &CollinearitySpec::Value(0.0), 3, 1).unwrap();
        let gram = f.columns(0, 3).transpose() * f.columns(0, 3);
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-10);
    }

    #[test]
    fn example_one_block_hits_the_target_correlation() {
        let f = gen_collinear_factors(4, 5, &CollinearitySpec::Value(0.99), 4, 3).unwrap();
        for r in 0..5 {
            assert!((f.column(r).norm() - 1.0).abs() < 1e-10);
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                let ip = f.column(i).dot(&f.column(j));
                assert!((ip - 0.99).abs() < 1e-10, "pair ({i},{j}): {ip}");
            }
        }
    }

    #[test]
    fn range_sampling_is_reproducible_and_in_range() {
        let spec = CollinearitySpec::Range(0.95, 0.999);
        let a = gen_collinear_factors(6, 6, &spec, 6, 11).unwrap();
        let b = gen_collinear_factors(6, 6, &spec, 6, 11).unwrap();
        assert_eq!(a, b);
        for i in 0..6 {
            for j in (i + 1)..6 {
                let ip = a.column(i).dot(&a.column(j));
                assert!((0.95..=0.999).contains(&ip), "pair ({i},{j}): {ip}");
            }
        }
    }

    #[test]
    fn infeasible_gram_reports_min_eigenvalue() {
        // Three unit vectors cannot all have pairwise inner product -0.9.
        let err = gen_collinear_factors(5, 3, &CollinearitySpec::Value(-0.9), 3, 1);
        match err {
            Err(HarnessError::InfeasibleGram { min_eig }) => assert!(min_eig < 0.0),
            other => panic!("expected InfeasibleGram, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn ex1_scenario_matches_the_reference_construction() {
        let cfg = base_config(Scenario::Ex1);
        let (t, model) = gen_paper_tensor(&cfg).unwrap();
        assert_eq!(t.shape(), &[4, 4, 4]);
        assert_eq!(model.rank(), 5);
        assert!(model.weights().iter().all(|&w| w == 1.0));
        for f in model.factors() {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    assert!((f.column(i).dot(&f.column(j)) - 0.99).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn ex1b_scenario_scales_weights_by_ten() {
        let cfg = base_config(Scenario::Ex1b);
        let (_, model) = gen_paper_tensor(&cfg).unwrap();
        let w: Vec<f64> = model.weights().iter().copied().collect();
        assert_eq!(w, vec![10.0, 20.0, 30.0, 40.0, 50.0]);
    }

    #[test]
    fn block_scenario_builds_rank_twelve_from_two_blocks() {
        let cfg = base_config(Scenario::ExBcd);
        let (t, model) = gen_paper_tensor(&cfg).unwrap();
        assert_eq!(t.shape(), &[6, 6, 6]);
        assert_eq!(model.rank(), 12);
        let f = model.factor(0);
        for i in 0..6 {
            for j in (i + 1)..6 {
                let ip = f.column(i).dot(&f.column(j));
                assert!((0.95..=0.999).contains(&ip));
            }
        }
    }

    #[test]
    fn generators_are_pure_functions_of_seed() {
        let cfg = base_config(Scenario::Ex1);
        let (t1, _) = gen_paper_tensor(&cfg).unwrap();
        let (t2, _) = gen_paper_tensor(&cfg).unwrap();
        assert_eq!(t1, t2);
        let mut cfg2 = cfg;
        cfg2.rng_seed = 8;
        let (t3, _) = gen_paper_tensor(&cfg2).unwrap();
        assert_ne!(t1, t3);
    }
}
