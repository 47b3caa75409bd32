use cpd_algorithms::{flm, random_init, RunTrace, SolverOptions};
use tensor_core::{residual_norm, DenseTensor, KruskalModel};

use crate::{acep, scep, CorrectionKind, EpcConfig, EpcError};

/// Applies one correction phase at the model's current residual, growing the
/// bound when the correction fails to bite.
fn correct(
    t: &DenseTensor,
    model: &KruskalModel,
    cfg: &EpcConfig,
    trace: &mut RunTrace,
) -> Result<KruskalModel, EpcError> {
    let mut current = model.normalize();
    let mut delta = residual_norm(t, &current)? * (1.0 + 1e-12);
    for _attempt in 0..3 {
        let eta_before = current.total_component_norm_sq();
        let local = EpcConfig {
            delta,
            ..cfg.clone()
        };
        let (corrected, tr) = match cfg.kind {
            CorrectionKind::Acep => acep(t, &current, &local)?,
            CorrectionKind::AcepThenScep => {
                let warm_cfg = EpcConfig {
                    max_correction_iters: cfg.switch_to_sqp_after.max(1),
                    ..local.clone()
                };
                let (warm, warm_tr) = acep(t, &current, &warm_cfg)?;
                trace.extend_from(&warm_tr);
                scep(t, &warm, &local)?
            }
        };
        trace.extend_from(&tr);
        let eta_after = corrected.total_component_norm_sq();
        current = corrected;
        if eta_after <= eta_before * (1.0 - 1e-3) || eta_before <= 1e-12 {
            break;
        }
        // Correction stalled at this bound; relax it and retry.
        delta *= cfg.delta_growth;
    }
    Ok(current)
}

/// CP decomposition with error preserving correction.
///
/// Fitting phases (the damped Gauss-Newton solver) alternate with correction
/// phases. A correction runs when the summed squared term norms pass
/// `trigger_ratio * ||Y||^2`, when the fitting stalls on its damping limit,
/// or at any explicitly scheduled iteration count. Each correction preserves
/// the residual reached so far while shrinking the term norms, which lets
/// the next fitting phase escape the degenerate region.
pub fn cpd_epc(
    t: &DenseTensor,
    rank: usize,
    init: Option<&KruskalModel>,
    opts: &SolverOptions,
    cfg: &EpcConfig,
) -> Result<(KruskalModel, RunTrace), EpcError> {
    cfg.validate()?;
    opts.validate().map_err(EpcError::from)?;
    let mut model = match init {
        Some(m) => m.clone(),
        None => random_init(t.shape(), rank, opts.rng_seed),
    };
    if model.rank() != rank {
        return Err(EpcError::BadConfig(format!(
            "initial model rank {} does not match requested rank {}",
            model.rank(),
            rank
        )));
    }

    let norm_y_sq = t.norm_sq();
    let trigger = cfg.trigger_ratio * norm_y_sq;
    let mut schedule: Vec<usize> = cfg.correction_schedule.clone();
    schedule.sort_unstable();
    schedule.dedup();

    let mut trace = RunTrace::default();
    let mut fit_iters_done = 0usize;
    let mut schedule_pos = 0usize;

    while fit_iters_done < opts.max_iters {
        let next_checkpoint = schedule
            .get(schedule_pos)
            .copied()
            .filter(|&c| c > fit_iters_done);
        let budget = match next_checkpoint {
            Some(c) => (c - fit_iters_done).min(opts.max_iters - fit_iters_done),
            None => opts.max_iters - fit_iters_done,
        };
        let stage_opts = SolverOptions {
            max_iters: budget,
            ..opts.clone()
        };
        let (fitted, fit_tr) = flm(t, &model, &stage_opts)?;
        model = fitted;
        fit_iters_done += fit_tr.records.last().map(|r| r.iter).unwrap_or(0);
        let stalled = fit_tr.stalled;
        let converged = fit_tr.converged;
        trace.extend_from(&fit_tr);

        let at_checkpoint = match next_checkpoint {
            Some(c) => fit_iters_done >= c,
            None => false,
        };
        if at_checkpoint {
            schedule_pos += 1;
        }
        let eta = model.total_component_norm_sq();
        let fire = at_checkpoint || stalled || eta >= trigger;

        if fire {
            model = correct(t, &model, cfg, &mut trace)?;
            continue;
        }
        if converged || fit_iters_done >= opts.max_iters {
            trace.converged = converged;
            trace.stalled = stalled;
            break;
        }
    }
    Ok((model.normalize(), trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benign_tensor_matches_plain_fitting() {
        let truth = random_init(&[4, 4, 4], 2, 3);
        let t = truth.reconstruct();
        let opts = SolverOptions::default().with_max_iters(150).with_seed(8);
        let cfg = EpcConfig::default();
        let (m_epc, tr_epc) = cpd_epc(&t, 2, None, &opts, &cfg).unwrap();
        let init = random_init(&[4, 4, 4], 2, 8);
        let (m_plain, tr_plain) = flm(&t, &init, &opts).unwrap();
        // The trigger never fires, so the runs are record-for-record equal.
        assert_eq!(tr_epc.len(), tr_plain.len());
        for (a, b) in tr_epc.records.iter().zip(tr_plain.records.iter()) {
            assert_eq!(a.rel_error, b.rel_error);
        }
        for (a, b) in m_epc.factors().iter().zip(m_plain.factors().iter()) {
            assert!((a - b).norm() <= 1e-14 * b.norm().max(1.0));
        }
    }
}
