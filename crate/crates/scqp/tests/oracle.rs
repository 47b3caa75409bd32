//! Randomized comparisons against the brute-force KKT enumeration oracles.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use scqp::{
    reduce_identical, solve_ball, solve_bounded_regression, solve_matrix_sphere, solve_sphere,
    BoundedRegression, ScqpProblem,
};
use test_oracles::{
    ball_kkt_oracle, bounded_regression_oracle, matrix_sphere_objective, sphere_kkt_oracle,
    sphere_objective,
};

fn random_sphere_problem(rng: &mut ChaCha8Rng, convex: bool) -> ScqpProblem {
    let k = rng.random_range(1..=6usize);
    let mut s: Vec<f64> = (0..k)
        .map(|_| {
            if convex {
                rng.random_range(0.05..4.0)
            } else {
                rng.random_range(-2.0..4.0)
            }
        })
        .collect();
    // Inject repeated eigenvalues and zero linear coefficients now and then.
    if k >= 2 && rng.random_bool(0.3) {
        s[1] = s[0];
    }
    s.sort_by(|a, b| a.total_cmp(b));
    let c: Vec<f64> = (0..k)
        .map(|_| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(-2.0..2.0)
            }
        })
        .collect();
    let radius = rng.random_range(0.2..3.0);
    ScqpProblem::new(
        DVector::from_column_slice(&s),
        DVector::from_column_slice(&c),
        radius,
    )
    .unwrap()
}

#[test]
fn sphere_matches_kkt_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..1000 {
        let p = random_sphere_problem(&mut rng, false);
        let sol = solve_sphere(&p).unwrap();
        assert!(
            (sol.z.norm() - p.radius()).abs() <= 1e-12 * p.radius(),
            "trial {}: constraint violated",
            trial
        );
        let kkt = (0..p.dim())
            .map(|r| ((p.s()[r] + sol.multiplier) * sol.z[r] + p.c()[r]).abs())
            .fold(0.0f64, f64::max);
        assert!(
            kkt <= 1e-10 * (1.0 + p.c().norm()),
            "trial {}: KKT residual {}",
            trial,
            kkt
        );
        let (oracle_obj, _) = sphere_kkt_oracle(p.s(), p.c(), p.radius());
        let got = p.objective(&sol.z);
        assert!(
            got <= oracle_obj + 1e-8,
            "trial {}: objective {} vs oracle {}",
            trial,
            got,
            oracle_obj
        );
    }
}

#[test]
fn sphere_beats_random_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let p = random_sphere_problem(&mut rng, false);
        let sol = solve_sphere(&p).unwrap();
        let best = p.objective(&sol.z);
        for _ in 0..10_000 {
            let dir = DVector::from_fn(p.dim(), |_, _| {
                rng.random_range(-1.0..1.0f64)
            });
            let nrm = dir.norm();
            if nrm == 0.0 {
                continue;
            }
            let probe = dir * (p.radius() / nrm);
            assert!(p.objective(&probe) >= best - 1e-9);
        }
    }
}

#[test]
fn ball_matches_oracle_and_complementarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..1000 {
        let p = random_sphere_problem(&mut rng, true);
        let sol = solve_ball(&p).unwrap();
        assert!(sol.z.norm() <= p.radius() * (1.0 + 1e-12));
        let slack = sol.multiplier * (sol.z.norm_squared() - p.radius() * p.radius());
        assert!(
            slack.abs() <= 1e-10 * (1.0 + p.radius() * p.radius()),
            "trial {}: complementarity {}",
            trial,
            slack
        );
        let (oracle_obj, _) = ball_kkt_oracle(p.s(), p.c(), p.radius());
        assert!(p.objective(&sol.z) <= oracle_obj + 1e-8, "trial {}", trial);
    }
}

#[test]
fn reduction_reproduces_direct_solve_on_repeated_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for trial in 0..1000 {
        let k = rng.random_range(2..=6usize);
        // Draw from few distinct levels so repetitions are guaranteed.
        let levels = [
            rng.random_range(-1.0..1.0f64),
            rng.random_range(1.0..2.0),
            rng.random_range(2.0..3.0),
        ];
        let mut s: Vec<f64> = (0..k).map(|_| levels[rng.random_range(0..3)]).collect();
        s.sort_by(|a, b| a.total_cmp(b));
        let c: Vec<f64> = (0..k)
            .map(|_| {
                if rng.random_bool(0.25) {
                    0.0
                } else {
                    rng.random_range(-1.5..1.5)
                }
            })
            .collect();
        let p = ScqpProblem::new(
            DVector::from_column_slice(&s),
            DVector::from_column_slice(&c),
            rng.random_range(0.3..2.0),
        )
        .unwrap();

        let (reduced, map) = reduce_identical(&p);
        for w in reduced.s().as_slice().windows(2) {
            assert!(w[1] > w[0]);
        }
        let expanded = map.expand(&solve_sphere(&reduced).unwrap().z);
        assert!((expanded.norm() - p.radius()).abs() <= 1e-10 * p.radius());
        let direct = solve_sphere(&p).unwrap();
        assert!(
            (p.objective(&expanded) - p.objective(&direct.z)).abs() <= 1e-10,
            "trial {}",
            trial
        );
    }
}

#[test]
fn matrix_sphere_matches_vectorized_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..1000 {
        let k = rng.random_range(1..=4usize);
        let r = rng.random_range(1..=3usize);
        let half = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0f64));
        let q = &half * half.transpose();
        let b = if rng.random_bool(0.1) {
            DMatrix::zeros(k, r)
        } else {
            DMatrix::from_fn(k, r, |_, _| rng.random_range(-1.0..1.0))
        };
        let radius = rng.random_range(0.3..2.0);
        let x = solve_matrix_sphere(&q, &b, radius).unwrap();
        assert!(
            (x.norm() - radius).abs() <= 1e-10 * radius,
            "trial {}: constraint",
            trial
        );
        let got = matrix_sphere_objective(&q, &b, &x);
        let oracle = test_oracles::matrix_sphere_oracle(&q, &b, radius);
        assert!(
            got <= oracle + 1e-8,
            "trial {}: {} vs oracle {}",
            trial,
            got,
            oracle
        );
    }
}

#[test]
fn bounded_regression_matches_multiplier_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut active_checked = 0;
    for trial in 0..1000 {
        let rows = rng.random_range(2..=6usize);
        let cols = rng.random_range(1..=rows);
        let a = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0f64));
        let y = DVector::from_fn(rows, |_, _| rng.random_range(-1.0..1.0f64));
        let svd = a.clone().svd(true, false);
        let u = svd.u.as_ref().unwrap();
        let perp = (&y - u * (u.transpose() * &y)).norm();
        let y_norm = y.norm();
        if y_norm - perp < 1e-6 {
            continue;
        }
        let t = rng.random_range(0.1..0.9);
        let delta = perp + t * (y_norm - perp);
        let p = BoundedRegression::new(a.clone(), y.clone(), delta).unwrap();
        let x = solve_bounded_regression(&p).unwrap();
        let achieved = (&y - &a * &x).norm();
        assert!(
            (achieved - delta).abs() <= 1e-10 * delta.max(1.0),
            "trial {}: residual {} target {}",
            trial,
            achieved,
            delta
        );
        if let Some(oracle_x) = bounded_regression_oracle(&a, &y, delta) {
            assert!(
                x.norm() <= oracle_x.norm() + 1e-7,
                "trial {}: norm {} vs oracle {}",
                trial,
                x.norm(),
                oracle_x.norm()
            );
            active_checked += 1;
        }
    }
    assert!(active_checked > 500);
}

#[test]
fn sphere_objective_helper_is_consistent() {
    let p = ScqpProblem::new(
        DVector::from_column_slice(&[1.0, 2.0]),
        DVector::from_column_slice(&[0.5, -0.5]),
        1.0,
    )
    .unwrap();
    let z = DVector::from_column_slice(&[0.6, 0.8]);
    assert!((p.objective(&z) - sphere_objective(p.s(), p.c(), &z)).abs() < 1e-15);
}
