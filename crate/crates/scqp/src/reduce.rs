use nalgebra::DVector;

use crate::ScqpProblem;

/// Bookkeeping for mapping a reduced solution back to the full problem.
#[derive(Debug, Clone)]
pub struct IdenticalGroups {
    groups: Vec<Vec<usize>>,
    c_full: DVector<f64>,
    c_reduced: DVector<f64>,
    dim: usize,
}

impl IdenticalGroups {
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Expands a minimizer of the reduced problem to the full problem.
    ///
    /// Group coordinates with a nonzero reduced coefficient are spread along
    /// the original linear term; groups with a zero coefficient carry the
    /// reduced coordinate on their first index (zero everywhere for groups
    /// past the first, by the solver's hard-case convention).
    pub fn expand(&self, z_reduced: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim);
        for (j, group) in self.groups.iter().enumerate() {
            if self.c_reduced[j] > 0.0 {
                let scale = z_reduced[j] / self.c_reduced[j];
                for &idx in group {
                    x[idx] = scale * self.c_full[idx];
                }
            } else {
                x[group[0]] = z_reduced[j];
            }
        }
        x
    }
}

/// Collapses runs of identical quadratic coefficients into a problem with
/// strictly increasing `s` and grouped linear coefficients
/// `c_j = ||c_{I_j}||`.
///
/// Eigenvalues within `1e-12 * max(1, |s|)` of the group anchor are treated
/// as identical.
pub fn reduce_identical(p: &ScqpProblem) -> (ScqpProblem, IdenticalGroups) {
    let s = p.s();
    let c = p.c();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut anchor = f64::NEG_INFINITY;
    for r in 0..s.len() {
        let tol = 1e-12 * s[r].abs().max(1.0);
        if groups.is_empty() || (s[r] - anchor).abs() > tol {
            groups.push(vec![r]);
            anchor = s[r];
        } else {
            groups.last_mut().unwrap().push(r);
        }
    }
    let s_reduced = DVector::from_fn(groups.len(), |j, _| s[groups[j][0]]);
    let c_reduced = DVector::from_fn(groups.len(), |j, _| {
        groups[j]
            .iter()
            .map(|&idx| c[idx] * c[idx])
            .sum::<f64>()
            .sqrt()
    });
    let reduced = ScqpProblem::new(s_reduced, c_reduced.clone(), p.radius())
        .expect("reduction preserves well-formedness");
    (
        reduced,
        IdenticalGroups {
            groups,
            c_full: c.clone(),
            c_reduced,
            dim: s.len(),
        },
    )
}
