use nalgebra::DMatrix;

/// The vec-transpose permutation: `P vec(X) = vec(X')` for square `R x R`
/// matrices, with entry `(i, j)` of `X` at vec position `i + j R`.
///
/// `P` is symmetric and orthogonal, and for any symmetric `G` it commutes
/// with `dvec(G) = diag(vec(G))` exactly.
pub fn vec_transpose_perm(r: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(r * r, r * r);
    for i in 0..r {
        for j in 0..r {
            p[(j + i * r, i + j * r)] = 1.0;
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_is_scalar_identity() {
        assert_eq!(vec_transpose_perm(1), DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn rank_two_swaps_the_middle_entries() {
        let p = vec_transpose_perm(2);
        let mut expected = DMatrix::zeros(4, 4);
        expected[(0, 0)] = 1.0;
        expected[(2, 1)] = 1.0;
        expected[(1, 2)] = 1.0;
        expected[(3, 3)] = 1.0;
        assert_eq!(p, expected);
    }

    #[test]
    fn symmetric_orthogonal_and_transposes_vec() {
        for r in 1..=6usize {
            let p = vec_transpose_perm(r);
            assert_eq!(p, p.transpose());
            assert_eq!(&p * &p, DMatrix::identity(r * r, r * r));
            let x = DMatrix::from_fn(r, r, |i, j| (i * r + j) as f64 + 0.5);
            let vx = DMatrix::from_column_slice(r * r, 1, x.as_slice());
            let vxt = DMatrix::from_column_slice(r * r, 1, x.transpose().as_slice());
            assert_eq!(&p * vxt, vx);
        }
    }
}
