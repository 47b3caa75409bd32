use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ScqpError {
    #[error("problem must have at least one variable")]
    Empty,

    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f64),

    #[error("coefficients must be finite")]
    NonFinite,

    #[error("quadratic coefficients must be sorted ascending (violated at index {0})")]
    NotAscending(usize),

    #[error("ball subproblem requires strictly positive curvature, s[{index}] = {value}")]
    NonPositiveCurvature { index: usize, value: f64 },

    #[error("matrix must be symmetric within 1e-10, max deviation {0}")]
    Asymmetric(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("bound {delta} is below the attainable residual {min_residual}")]
    InfeasibleBound { delta: f64, min_residual: f64 },

    #[error("secular root finding failed to converge")]
    SecularDiverged,
}

/// Diagonal quadratic program on a sphere or ball:
/// `0.5 z' diag(s) z + c' z` with `||z|| = radius` (or `<= radius`).
#[derive(Debug, Clone, PartialEq)]
pub struct ScqpProblem {
    pub(crate) s: DVector<f64>,
    pub(crate) c: DVector<f64>,
    pub(crate) radius: f64,
}

impl ScqpProblem {
    /// Builds a problem; `s` must already be sorted ascending.
    pub fn new(s: DVector<f64>, c: DVector<f64>, radius: f64) -> Result<Self, ScqpError> {
        if s.is_empty() {
            return Err(ScqpError::Empty);
        }
        if s.len() != c.len() {
            return Err(ScqpError::Dimension(format!(
                "s has {} entries, c has {}",
                s.len(),
                c.len()
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(ScqpError::BadRadius(radius));
        }
        if s.iter().chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(ScqpError::NonFinite);
        }
        for i in 1..s.len() {
            if s[i] < s[i - 1] {
                return Err(ScqpError::NotAscending(i));
            }
        }
        Ok(Self { s, c, radius })
    }

    /// Sorts the coefficients ascending by `s` and returns the permutation
    /// mapping sorted positions back to the caller's ordering.
    pub fn new_sorted(
        s: DVector<f64>,
        c: DVector<f64>,
        radius: f64,
    ) -> Result<(Self, Vec<usize>), ScqpError> {
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
        let s_sorted = DVector::from_fn(s.len(), |i, _| s[order[i]]);
        let c_sorted = DVector::from_fn(c.len(), |i, _| c[order[i]]);
        Ok((Self::new(s_sorted, c_sorted, radius)?, order))
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Objective value at a point.
    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z
            .iter()
            .zip(self.s.iter())
            .map(|(zi, si)| si * zi * zi)
            .sum::<f64>()
            + self.c.dot(z)
    }

    /// Canonical scaled form with `s[0] = 1` and `||c|| = 1` (when `c != 0`).
    ///
    /// The minimizer is unchanged; a multiplier of the canonical problem maps
    /// back through [`CanonicalMap::multiplier_back`].
    pub fn canonicalized(&self) -> (ScqpProblem, CanonicalMap) {
        let c_norm = self.c.norm();
        let scale = if c_norm > 0.0 { c_norm } else { 1.0 };
        let shift = self.s[0];
        let s = self.s.map(|v| (v - shift) / scale + 1.0);
        let c = &self.c / scale;
        (
            ScqpProblem {
                s,
                c,
                radius: self.radius,
            },
            CanonicalMap { scale, shift },
        )
    }
}

/// Mapping from a canonicalized problem's multiplier back to the original.
#[derive(Debug, Clone, Copy)]
pub struct CanonicalMap {
    scale: f64,
    shift: f64,
}

impl CanonicalMap {
    pub fn multiplier_back(&self, lambda_canonical: f64) -> f64 {
        self.scale * (lambda_canonical + 1.0) - self.shift
    }
}

/// Minimum-norm linear regression subject to `||y - A x|| <= delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedRegression {
    pub(crate) a: DMatrix<f64>,
    pub(crate) y: DVector<f64>,
    pub(crate) delta: f64,
}

impl BoundedRegression {
    pub fn new(a: DMatrix<f64>, y: DVector<f64>, delta: f64) -> Result<Self, ScqpError> {
        if a.nrows() != y.len() {
            return Err(ScqpError::Dimension(format!(
                "A has {} rows, y has {} entries",
                a.nrows(),
                y.len()
            )));
        }
        if a.ncols() == 0 || a.nrows() == 0 {
            return Err(ScqpError::Empty);
        }
        if !(delta.is_finite() && delta >= 0.0)
            || a.iter().chain(y.iter()).any(|v| !v.is_finite())
        {
            return Err(ScqpError::NonFinite);
        }
        Ok(Self { a, y, delta })
    }

    pub fn regressors(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}
