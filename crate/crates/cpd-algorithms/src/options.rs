use crate::SolverError;

/// Shared knobs for the iterative solvers.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Iteration cap (sweeps for ALS, linear solves for fLM).
    pub max_iters: usize,
    /// Converged when the relative error changes by less than this over
    /// `stall_window` consecutive iterations.
    pub tol_rel_change: f64,
    /// Window length for the change test.
    pub stall_window: usize,
    /// Damping seed; the initial mu is this times the mean Hessian block
    /// diagonal, and the run stalls when mu exceeds 1e12 times its start.
    pub damping_init: f64,
    /// Tikhonov coefficient on `0.5 sum_n ||U^(n)||_F^2`; zero disables it.
    pub tikhonov: f64,
    /// Per-accepted-step multiplier on the Tikhonov coefficient.
    pub tikhonov_decay: f64,
    /// Seed consumed by callers that derive random initializations.
    pub rng_seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            tol_rel_change: 1e-12,
            stall_window: 10,
            damping_init: 1e-4,
            tikhonov: 0.0,
            tikhonov_decay: 1.0,
            rng_seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.max_iters == 0 {
            return Err(SolverError::BadOptions("max_iters must be >= 1".into()));
        }
        if !(self.tol_rel_change > 0.0) {
            return Err(SolverError::BadOptions(
                "tol_rel_change must be positive".into(),
            ));
        }
        if !(self.damping_init > 0.0) {
            return Err(SolverError::BadOptions(
                "damping_init must be positive".into(),
            ));
        }
        if self.tikhonov < 0.0 {
            return Err(SolverError::BadOptions(
                "tikhonov must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn with_max_iters(mut self, n: usize) -> Self {
        self.max_iters = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }
}
