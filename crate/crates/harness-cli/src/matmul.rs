use nalgebra::{DMatrix, DVector};
use tensor_core::{DenseTensor, KruskalModel};

use crate::HarnessError;

/// Sizes of the matrix multiplication encoded by a `<m, n, p>` tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatmulSpec {
    pub m: usize,
    pub n: usize,
    pub p: usize,
}

impl MatmulSpec {
    pub fn new(m: usize, n: usize, p: usize) -> Result<Self, HarnessError> {
        if m == 0 || n == 0 || p == 0 {
            return Err(HarnessError::BadConfig(
                "matmul sizes must be positive".into(),
            ));
        }
        Ok(Self { m, n, p })
    }

    /// Tensor extents `(mn, np, pm)`.
    pub fn dims(&self) -> [usize; 3] {
        [self.m * self.n, self.n * self.p, self.p * self.m]
    }

    /// The trivial rank-`mnp` expansion: one rank-1 term per scalar product
    /// `A(a,b) B(b,c)` contributing to `C(a,c)`.
    pub fn unit_expansion(&self) -> KruskalModel {
        let [d1, d2, d3] = self.dims();
        let rank = self.m * self.n * self.p;
        let mut u1 = DMatrix::zeros(d1, rank);
        let mut u2 = DMatrix::zeros(d2, rank);
        let mut u3 = DMatrix::zeros(d3, rank);
        let mut r = 0;
        for a in 0..self.m {
            for b in 0..self.n {
                for c in 0..self.p {
                    u1[(a * self.n + b, r)] = 1.0;
                    u2[(b * self.p + c, r)] = 1.0;
                    u3[(c * self.m + a, r)] = 1.0;
                    r += 1;
                }
            }
        }
        KruskalModel::new(DVector::from_element(rank, 1.0), vec![u1, u2, u3])
            .expect("expansion shapes are consistent")
    }
}

/// The 0/1 tensor of the bilinear map `(A, B) -> A B`.
///
/// Index conventions follow the row-major vectorizations `vec(A')`,
/// `vec(B')` on the first two modes and the column-major `vec(AB)` on the
/// third, so contracting the first two modes with those vectors yields the
/// vectorized product exactly.
pub fn gen_matmul_tensor(spec: &MatmulSpec) -> DenseTensor {
    let dims = spec.dims();
    let mut t = vec![0.0; dims.iter().product()];
    let (d1, d2) = (dims[0], dims[1]);
    for a in 0..spec.m {
        for b in 0..spec.n {
            for c in 0..spec.p {
                let i = a * spec.n + b;
                let j = b * spec.p + c;
                let k = c * spec.m + a;
                t[i + j * d1 + k * d1 * d2] = 1.0;
            }
        }
    }
    DenseTensor::new(dims.to_vec(), t).expect("matmul tensor is well formed")
}

/// Contracts the first two modes with `vec(A')` and `vec(B')`, returning
/// the length-`pm` result that should equal `vec(A B)`.
pub fn bilinear_map(t: &DenseTensor, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DVector<f64> {
    let dims = t.shape();
    let (d1, d2, d3) = (dims[0], dims[1], dims[2]);
    let va: Vec<f64> = {
        // vec(A'): row-major stacking of A
        let mut v = Vec::with_capacity(d1);
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                v.push(a[(r, c)]);
            }
        }
        v
    };
    let vb: Vec<f64> = {
        let mut v = Vec::with_capacity(d2);
        for r in 0..b.nrows() {
            for c in 0..b.ncols() {
                v.push(b[(r, c)]);
            }
        }
        v
    };
    let data = t.data();
    DVector::from_fn(d3, |k, _| {
        let mut acc = 0.0;
        for j in 0..d2 {
            let base = j * d1 + k * d1 * d2;
            let mut inner = 0.0;
            for (i, &ai) in va.iter().enumerate() {
                inner += ai * data[base + i];
            }
            acc += inner * vb[j];
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_case_is_a_single_one() {
        let t = gen_matmul_tensor(&MatmulSpec::new(1, 1, 1).unwrap());
        assert_eq!(t.shape(), &[1, 1, 1]);
        assert_eq!(t.data(), &[1.0]);
    }

    #[test]
    fn three_by_three_has_twenty_seven_ones() {
        let t = gen_matmul_tensor(&MatmulSpec::new(3, 3, 3).unwrap());
        assert_eq!(t.shape(), &[9, 9, 9]);
        let ones = t.data().iter().filter(|&&v| v == 1.0).count();
        let zeros = t.data().iter().filter(|&&v| v == 0.0).count();
        assert_eq!(ones, 27);
        assert_eq!(zeros, t.len() - 27);
    }

    #[test]
    fn bilinear_identity_holds_for_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for m in 1..=3usize {
            for n in 1..=3usize {
                for p in 1..=3usize {
                    let spec = MatmulSpec::new(m, n, p).unwrap();
                    let t = gen_matmul_tensor(&spec);
                    for _ in 0..100 {
                        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0f64));
                        let b = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0f64));
                        let got = bilinear_map(&t, &a, &b);
                        let c = &a * &b;
                        let expected = DVector::from_column_slice(c.as_slice());
                        assert!(
                            (got - expected).amax() <= 1e-12,
                            "sizes ({m},{n},{p})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn unit_expansion_reconstructs_the_tensor() {
        let spec = MatmulSpec::new(2, 2, 2).unwrap();
        let t = gen_matmul_tensor(&spec);
        let model = spec.unit_expansion();
        assert_eq!(model.reconstruct(), t);
        assert_eq!(model.rank(), 8);
    }
}
