//! Brute-force reference solvers for test suites.
//!
//! Everything here trades speed for independence: KKT points of the diagonal
//! sphere-constrained QP are enumerated through the roots of the secular
//! polynomial (companion-matrix eigenvalues), not through the bracketed
//! root-finding the production solver uses, and the bounded regression
//! reference sweeps the regularization path by bisection.

use nalgebra::{Complex, DMatrix, DVector};

/// Objective `0.5 z' diag(s) z + c' z`.
pub fn sphere_objective(s: &DVector<f64>, c: &DVector<f64>, z: &DVector<f64>) -> f64 {
    0.5 * z.iter().zip(s.iter()).map(|(zi, si)| si * zi * zi).sum::<f64>() + c.dot(z)
}

/// Multiplies polynomial coefficient vectors (ascending powers).
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// All complex roots of a real polynomial via the companion matrix.
fn poly_roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    // Trim tiny leading coefficients to keep the companion matrix sane.
    let mut c = coeffs.to_vec();
    let max = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Vec::new();
    }
    while c.len() > 1 && c.last().unwrap().abs() <= 1e-14 * max {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let mut companion = DMatrix::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        companion[(i, n - 1)] = -c[i] / lead;
    }
    companion.complex_eigenvalues().iter().copied().collect()
}

/// Enumerates every KKT point of
/// `min 0.5 z' diag(s) z + c' z  s.t.  ||z|| = radius`
/// and returns the best (objective, point).
///
/// Interior multipliers are the real roots of the secular polynomial
/// `sum_r c_r^2 prod_{q != r} (s_q + t)^2 - radius^2 prod_r (s_r + t)^2`;
/// boundary multipliers `t = -s_j` are added whenever the linear term
/// vanishes on the matching eigenspace.
pub fn sphere_kkt_oracle(
    s: &DVector<f64>,
    c: &DVector<f64>,
    radius: f64,
) -> (f64, DVector<f64>) {
    let k = s.len();
    let scale = s.amax().max(1.0);

    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut consider = |obj: f64, z: DVector<f64>| {
        if best.as_ref().map(|(b, _)| obj < *b).unwrap_or(true) {
            best = Some((obj, z));
        }
    };

    // Interior-multiplier candidates from the secular polynomial.
    let mut poly = vec![-radius * radius];
    for r in 0..k {
        poly = poly_mul(&poly, &poly_mul(&[s[r], 1.0], &[s[r], 1.0]));
    }
    for r in 0..k {
        let mut term = vec![c[r] * c[r]];
        for q in 0..k {
            if q != r {
                term = poly_mul(&term, &poly_mul(&[s[q], 1.0], &[s[q], 1.0]));
            }
        }
        for (i, v) in term.iter().enumerate() {
            poly[i] += v;
        }
    }
    let phi_at = |lambda: f64| -> f64 {
        let mut phi = -radius * radius;
        for r in 0..k {
            let d = s[r] + lambda;
            phi += c[r] * c[r] / (d * d);
        }
        phi
    };
    let pole_free = |a: f64, b: f64| -> bool {
        (0..k).all(|r| (s[r] + a) * (s[r] + b) > 0.0)
    };
    for root in poly_roots(&poly) {
        if root.im.abs() > 1e-7 * (1.0 + root.re.abs()) {
            continue;
        }
        let mut lambda = root.re;
        if (0..k).any(|r| (s[r] + lambda).abs() <= 1e-10 * scale) {
            continue;
        }
        // Companion-matrix roots of a degree-2K polynomial can be several
        // digits off near multiple roots. Re-bracket each candidate and
        // bisect to machine precision; roots that refuse to bracket inside a
        // pole-free interval are dropped (they cannot be the smooth global
        // minimizer, which lies on the strictly monotone rightmost branch).
        let mut h = 1e-12 * (1.0 + lambda.abs());
        let mut bracketed = false;
        while h < 1.0 + lambda.abs() {
            let (a, b) = (lambda - h, lambda + h);
            if pole_free(a, b) && phi_at(a) * phi_at(b) <= 0.0 {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if phi_at(lo) * phi_at(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo <= f64::EPSILON * (1.0 + mid.abs()) {
                        break;
                    }
                }
                lambda = 0.5 * (lo + hi);
                bracketed = true;
                break;
            }
            h *= 4.0;
        }
        if !bracketed {
            continue;
        }
        let mut z = DVector::from_fn(k, |r, _| -c[r] / (s[r] + lambda));
        let norm = z.norm();
        if (norm - radius).abs() > 1e-6 * radius || norm == 0.0 {
            continue;
        }
        // Exact feasibility so no candidate undercuts the true minimum.
        z *= radius / norm;
        consider(sphere_objective(s, c, &z), z);
    }

    // Boundary candidates at each distinct eigenvalue.
    let mut distinct: Vec<f64> = Vec::new();
    for r in 0..k {
        if distinct
            .iter()
            .all(|&v| (v - s[r]).abs() > 1e-12 * scale)
        {
            distinct.push(s[r]);
        }
    }
    for &sj in &distinct {
        let group: Vec<usize> = (0..k)
            .filter(|&r| (s[r] - sj).abs() <= 1e-12 * scale)
            .collect();
        let c_group_norm: f64 = group.iter().map(|&r| c[r] * c[r]).sum::<f64>().sqrt();
        if c_group_norm > 1e-13 * c.norm().max(1.0) {
            continue;
        }
        let mut d_sq = 0.0;
        let mut z = DVector::zeros(k);
        for r in 0..k {
            if (s[r] - sj).abs() <= 1e-12 * scale {
                continue;
            }
            z[r] = -c[r] / (s[r] - sj);
            d_sq += z[r] * z[r];
        }
        if d_sq > radius * radius * (1.0 + 1e-12) {
            continue;
        }
        z[group[0]] = (radius * radius - d_sq).max(0.0).sqrt();
        consider(sphere_objective(s, c, &z), z);
    }

    best.expect("KKT enumeration produced no candidate")
}

/// Best feasible point of the ball-constrained problem: the interior
/// stationary point (when inside) plus every sphere KKT point.
pub fn ball_kkt_oracle(s: &DVector<f64>, c: &DVector<f64>, radius: f64) -> (f64, DVector<f64>) {
    let interior = DVector::from_fn(s.len(), |r, _| -c[r] / s[r]);
    let (sphere_obj, sphere_z) = sphere_kkt_oracle(s, c, radius);
    if interior.norm() <= radius {
        let interior_obj = sphere_objective(s, c, &interior);
        if interior_obj < sphere_obj {
            return (interior_obj, interior);
        }
    }
    (sphere_obj, sphere_z)
}

/// Reference for the matrix-variate sphere problem
/// `min 0.5 tr(X' Q X) + tr(B' X)  s.t.  ||X||_F = radius`
/// via a dense eigendecomposition of the KR-dimensional vectorized form and
/// the KKT enumeration above.
pub fn matrix_sphere_oracle(q: &DMatrix<f64>, b: &DMatrix<f64>, radius: f64) -> f64 {
    let k = q.nrows();
    let r = b.ncols();
    let kr = k * r;
    // I_R kron Q
    let mut big = DMatrix::zeros(kr, kr);
    for blk in 0..r {
        big.view_mut((blk * k, blk * k), (k, k)).copy_from(q);
    }
    let eig = big.symmetric_eigen();
    let mut order: Vec<usize> = (0..kr).collect();
    order.sort_by(|&a, &bb| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[bb]));
    let s = DVector::from_fn(kr, |i, _| eig.eigenvalues[order[i]]);
    let vec_b = DVector::from_column_slice(b.as_slice());
    let c = DVector::from_fn(kr, |i, _| eig.eigenvectors.column(order[i]).dot(&vec_b));
    sphere_kkt_oracle(&s, &c, radius).0
}

/// Matrix objective evaluated directly.
pub fn matrix_sphere_objective(q: &DMatrix<f64>, b: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    0.5 * (x.transpose() * q * x).trace() + (b.transpose() * x).trace()
}

/// Reference for bounded-error regression: sweeps the multiplier in
/// `x(t) = t (I + t A'A)^{-1} A'y` by bisection until `||y - A x|| = delta`.
/// Returns the swept solution.
pub fn bounded_regression_oracle(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    delta: f64,
) -> Option<DVector<f64>> {
    let k = a.ncols();
    let gram = a.transpose() * a;
    let aty = a.transpose() * y;
    let residual_at = |t: f64| -> Option<(f64, DVector<f64>)> {
        let m = DMatrix::identity(k, k) + &gram * t;
        let x = m.lu().solve(&(&aty * t))?;
        let r = (y - a * &x).norm();
        Some((r, x))
    };
    // ||y - A x(t)|| decreases monotonically from ||y|| at t = 0.
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..200 {
        match residual_at(hi) {
            Some((r, _)) if r > delta => hi *= 2.0,
            _ => break,
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let (r, _) = residual_at(mid)?;
        if r > delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    residual_at(0.5 * (lo + hi)).map(|(_, x)| x)
}

/// Central finite-difference gradient of a scalar function.
pub fn fd_gradient<F: FnMut(&DVector<f64>) -> f64>(
    f: &mut F,
    theta: &DVector<f64>,
) -> DVector<f64> {
    let n = theta.len();
    let mut g = DVector::zeros(n);
    for i in 0..n {
        let h = 1e-6 * (1.0 + theta[i].abs());
        let mut tp = theta.clone();
        tp[i] += h;
        let mut tm = theta.clone();
        tm[i] -= h;
        g[i] = (f(&tp) - f(&tm)) / (2.0 * h);
    }
    g
}

/// Central finite-difference directional derivative of a vector function,
/// used to validate Hessian-vector products.
pub fn fd_directional<F: FnMut(&DVector<f64>) -> DVector<f64>>(
    g: &mut F,
    theta: &DVector<f64>,
    dir: &DVector<f64>,
) -> DVector<f64> {
    let h = 1e-6 * (1.0 + theta.amax());
    let tp = theta + dir * h;
    let tm = theta - dir * h;
    (g(&tp) - g(&tm)) / (2.0 * h)
}
