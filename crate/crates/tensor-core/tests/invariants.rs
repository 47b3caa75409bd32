use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use tensor_core::{
    fold, gram_skip, khatri_rao_skip, mttkrp, relative_error, residual_norm, unfold, DenseTensor,
    KruskalModel,
};

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> DenseTensor {
    let len = shape.iter().product();
    let data = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseTensor::new(shape.to_vec(), data).unwrap()
}

fn random_model(rng: &mut ChaCha8Rng, dims: &[usize], rank: usize) -> KruskalModel {
    let factors = dims
        .iter()
        .map(|&d| DMatrix::from_fn(d, rank, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let weights = DVector::from_fn(rank, |_, _| rng.random_range(0.2..2.0));
    KruskalModel::new(weights, factors).unwrap()
}

/// Residual computed the slow way, through a full reconstruction.
fn explicit_residual(t: &DenseTensor, m: &KruskalModel) -> f64 {
    t.sub(&m.reconstruct()).unwrap().norm()
}

fn small_shapes() -> Vec<Vec<usize>> {
    // Every shape with at most 200 elements over a progression of orders.
    let mut shapes = Vec::new();
    for a in 1..=5usize {
        for b in 1..=5usize {
            shapes.push(vec![a, b]);
            for c in 1..=5usize {
                if a * b * c <= 200 {
                    shapes.push(vec![a, b, c]);
                }
            }
        }
    }
    shapes.push(vec![2, 3, 4, 2]);
    shapes.push(vec![3, 2, 2, 2]);
    shapes
}

#[test]
fn mttkrp_matches_materialized_product_on_small_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for shape in small_shapes() {
        let t = random_tensor(&mut rng, &shape);
        let m = random_model(&mut rng, &shape, 2);
        for mode in 0..shape.len() {
            let fast = mttkrp(&t, &m, mode).unwrap();
            let naive = unfold(&t, mode).unwrap() * khatri_rao_skip(m.factors(), mode).unwrap();
            let denom = naive.norm().max(1.0);
            assert!(
                (&fast - &naive).norm() <= 1e-12 * denom,
                "shape {:?} mode {}",
                shape,
                mode
            );
        }
    }
}

#[test]
fn mttkrp_of_exact_model_matches_weighted_gram_product() {
    // When the tensor equals the reconstruction, G_n = U_eta^(n) Gamma_{-n}.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = random_model(&mut rng, &[3, 4, 2], 3);
    let t = m.reconstruct();
    for mode in 0..3 {
        let g = mttkrp(&t, &m, mode).unwrap();
        let expected = m.weighted_factor(mode) * gram_skip(&m, mode);
        assert!((&g - &expected).norm() <= 1e-12 * expected.norm().max(1.0));
    }
}

#[test]
fn gram_skip_orthonormal_factors_give_identity() {
    let id3 = DMatrix::<f64>::identity(3, 2);
    let id4 = DMatrix::<f64>::identity(4, 2);
    let id5 = DMatrix::<f64>::identity(5, 2);
    let m = KruskalModel::from_factors(vec![id3, id4, id5]).unwrap();
    let g = gram_skip(&m, 1);
    assert!((g - DMatrix::identity(2, 2)).norm() < 1e-15);
}

#[test]
fn gram_skip_is_hadamard_of_factor_grams() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = random_model(&mut rng, &[4, 3, 5], 3);
    let g = gram_skip(&m, 0);
    let g1 = m.factor(1).transpose() * m.factor(1);
    let g2 = m.factor(2).transpose() * m.factor(2);
    assert!((g - g1.component_mul(&g2)).norm() < 1e-13);

    let t_mat = khatri_rao_skip(m.factors(), 0).unwrap();
    let direct = t_mat.transpose() * &t_mat;
    assert!((gram_skip(&m, 0) - direct).norm() < 1e-12);
}

#[test]
fn trace_expansion_matches_explicit_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let dims = [
            rng.random_range(2..5usize),
            rng.random_range(2..5usize),
            rng.random_range(2..5usize),
        ];
        let rank = rng.random_range(1..4usize);
        let t = random_tensor(&mut rng, &dims);
        let m = random_model(&mut rng, &dims, rank);
        let fast = residual_norm(&t, &m).unwrap();
        let slow = explicit_residual(&t, &m);
        assert!(
            (fast - slow).abs() <= 1e-10 * slow.max(1e-30),
            "fast {} explicit {}",
            fast,
            slow
        );
    }
}

#[test]
fn exact_model_has_zero_relative_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = random_model(&mut rng, &[3, 3, 3], 2);
    let t = m.reconstruct();
    assert!(relative_error(&t, &m).unwrap() <= 1e-12);
}

#[test]
fn normalize_and_balance_preserve_reconstruction_and_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..20 {
        let m = random_model(&mut rng, &[3, 4, 2], 3);
        let base = m.reconstruct();
        let energy = m.component_norms_sq().sum();
        for variant in [m.normalize(), m.balance()] {
            let rec = variant.reconstruct();
            assert!(base.sub(&rec).unwrap().norm() <= 1e-12 * base.norm().max(1.0));
            let e = variant.component_norms_sq().sum();
            assert!((e - energy).abs() <= 1e-12 * energy.max(1.0));
        }
    }
}

#[test]
fn normalize_scaling_a_column_scales_the_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = random_model(&mut rng, &[3, 3], 2).normalize();
    let mut scaled = m.factor(0).clone();
    let mut col = scaled.column_mut(1);
    col *= 3.0;
    let m2 = m.clone().with_factor(0, scaled).normalize();
    assert!((m2.weights()[1] - 3.0 * m.weights()[1]).abs() < 1e-12);
    assert!((m2.weights()[0] - m.weights()[0]).abs() < 1e-12);
}

#[test]
fn normalize_zero_column_yields_zero_weight_and_basis_vector() {
    let factors = vec![
        DMatrix::from_column_slice(2, 1, &[0.0, 0.0]),
        DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
    ];
    let m = KruskalModel::from_factors(factors).unwrap().normalize();
    assert_eq!(m.weights()[0], 0.0);
    assert_eq!(m.factor(0).column(0).as_slice(), &[1.0, 0.0]);
}

#[test]
fn balance_equalizes_column_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let m = random_model(&mut rng, &[3, 4, 2], 2).balance();
    for r in 0..2 {
        let norms: Vec<f64> = (0..3).map(|n| m.factor(n).column(r).norm()).collect();
        for w in norms.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-12 * w[0].max(1.0));
        }
    }
    assert!(m.weights().iter().all(|&w| w == 1.0));
}

#[test]
fn rejects_non_finite_data() {
    let err = DenseTensor::new(vec![2], vec![1.0, f64::NAN]);
    assert!(err.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fold_unfold_round_trip_random(seed in 0u64..1000, order in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape: Vec<usize> = (0..order).map(|_| rng.random_range(1..5usize)).collect();
        let t = random_tensor(&mut rng, &shape);
        for mode in 0..order {
            let u = unfold(&t, mode).unwrap();
            let back = fold(&u, mode, t.shape()).unwrap();
            prop_assert_eq!(&back, &t);
        }
    }

    #[test]
    fn reconstruction_matches_unfolding_identity(seed in 0u64..1000) {
        // unfold(reconstruct(m), n) == weighted_factor(n) * T_n^T exactly
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = [rng.random_range(2..4usize), rng.random_range(2..4usize), rng.random_range(2..4usize)];
        let m = random_model(&mut rng, &dims, 2);
        let rec = m.reconstruct();
        for mode in 0..3 {
            let lhs = unfold(&rec, mode).unwrap();
            let t_mat = khatri_rao_skip(m.factors(), mode).unwrap();
            let rhs = m.weighted_factor(mode) * t_mat.transpose();
            prop_assert!((&lhs - &rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
        }
    }
}
