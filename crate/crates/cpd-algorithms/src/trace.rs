/// One iteration record; `lambda` is zero where no multiplier exists and
/// `bound` carries the norm bound only for the bounded solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub rel_error: f64,
    pub eta_sq_norm: f64,
    pub mu: f64,
    pub lambda: f64,
    pub seconds: f64,
    pub accepted: bool,
    pub regularized: bool,
    pub bound: Option<f64>,
}

/// Per-run iteration history plus terminal flags.
#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub stalled: bool,
    pub converged: bool,
}

impl RunTrace {
    pub fn push(&mut self, record: TraceRecord) {
        if let Some(last) = self.records.last() {
            debug_assert!(record.iter > last.iter, "iteration indices must increase");
        }
        debug_assert!(record.rel_error.is_finite());
        self.records.push(record);
    }

    pub fn last_rel_error(&self) -> Option<f64> {
        self.records.last().map(|r| r.rel_error)
    }

    pub fn best_rel_error(&self) -> Option<f64> {
        self.records
            .iter()
            .map(|r| r.rel_error)
            .min_by(|a, b| a.total_cmp(b))
    }

    /// First iteration index at which the error fell to `threshold`.
    pub fn iters_to_reach(&self, threshold: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.rel_error <= threshold)
            .map(|r| r.iter)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends another trace, shifting its iteration indices to continue
    /// after this one.
    pub fn extend_from(&mut self, other: &RunTrace) {
        let offset = self.records.last().map(|r| r.iter).unwrap_or(0);
        for r in &other.records {
            let mut shifted = r.clone();
            shifted.iter += offset;
            self.records.push(shifted);
        }
        self.stalled = other.stalled;
        self.converged = other.converged;
    }
}
