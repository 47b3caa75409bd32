use crate::EpcError;

/// Which correction algorithm the driver applies at a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectionKind {
    /// Alternating correction only.
    Acep,
    /// Alternating warm start, then the all-at-once SQP.
    AcepThenScep,
}

/// Configuration of the error preserving correction.
#[derive(Debug, Clone)]
pub struct EpcConfig {
    /// Error bound in Frobenius units of the data tensor. The driver
    /// overrides this with the running residual; standalone calls use it
    /// as given.
    pub delta: f64,
    /// Multiplier applied to `delta` when a correction stalls.
    pub delta_growth: f64,
    /// Alternating sweeps per correction call.
    pub max_correction_iters: usize,
    /// Alternating warm-start sweeps before the SQP stage.
    pub switch_to_sqp_after: usize,
    /// SQP iteration cap.
    pub sqp_iters: usize,
    /// Correction algorithm used by the driver.
    pub kind: CorrectionKind,
    /// Stop an alternating correction when the squared term norm improves
    /// by less than this relative amount.
    pub tol_eta_change: f64,
    /// Feasibility tolerance scale for the SQP: violations up to this times
    /// `||Y||^2` count as feasible.
    pub tol_constraint: f64,
    /// Driver trigger: correct when `sum eta_r^2 >= trigger_ratio * ||Y||^2`.
    pub trigger_ratio: f64,
    /// Explicit fitting-iteration checkpoints at which the driver corrects
    /// regardless of the trigger.
    pub correction_schedule: Vec<usize>,
}

impl Default for EpcConfig {
    fn default() -> Self {
        Self {
            delta: 0.0,
            delta_growth: 1.1,
            max_correction_iters: 50,
            switch_to_sqp_after: 5,
            sqp_iters: 100,
            kind: CorrectionKind::Acep,
            tol_eta_change: 1e-9,
            tol_constraint: 1e-8,
            trigger_ratio: 10.0,
            correction_schedule: Vec::new(),
        }
    }
}

impl EpcConfig {
    pub fn validate(&self) -> Result<(), EpcError> {
        if self.delta < 0.0 || !self.delta.is_finite() {
            return Err(EpcError::BadConfig("delta must be nonnegative".into()));
        }
        if self.delta_growth < 1.0 {
            return Err(EpcError::BadConfig("delta_growth must be >= 1".into()));
        }
        if self.max_correction_iters == 0 {
            return Err(EpcError::BadConfig(
                "max_correction_iters must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_kind(mut self, kind: CorrectionKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_schedule(mut self, schedule: Vec<usize>) -> Self {
        self.correction_schedule = schedule;
        self
    }
}

/// Configuration of the bounded-norm solvers.
#[derive(Debug, Clone)]
pub struct BoundConfig {
    /// Bound on `||eta||_2`.
    pub epsilon: f64,
    /// Bound growth on a stall.
    pub grow_factor: f64,
    /// Bound reduction when the error is converging.
    pub shrink_factor: f64,
    /// Iterations over which progress is measured for the bound schedule.
    pub stall_window: usize,
    /// A window improving by less than this counts as stalled.
    pub stall_tol: f64,
    /// Enable the grow/shrink schedule; otherwise the bound stays fixed.
    pub adapt_bound: bool,
    /// Iteration cap.
    pub max_iters: usize,
    /// Converged when the relative error changes less than this across the
    /// stall window.
    pub tol_rel_change: f64,
    /// Feasibility tolerance scale: violations up to this times `epsilon^2`
    /// count as feasible in the SQP.
    pub tol_constraint: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            grow_factor: 2.0,
            shrink_factor: 1.5,
            stall_window: 20,
            stall_tol: 1e-6,
            adapt_bound: false,
            max_iters: 500,
            tol_rel_change: 1e-12,
            tol_constraint: 1e-8,
        }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<(), EpcError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(EpcError::BadConfig("epsilon must be positive".into()));
        }
        if self.grow_factor <= 1.0 || self.shrink_factor <= 1.0 {
            return Err(EpcError::BadConfig(
                "bound factors must exceed 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_adaptation(mut self, on: bool) -> Self {
        self.adapt_bound = on;
        self
    }
}
