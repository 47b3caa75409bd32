//! Experiment harness for the CP decomposition toolkit: synthetic tensor
//! generators with controlled collinearity, the matrix-multiplication
//! tensor builder, noise injection, a Monte-Carlo success-ratio runner, and
//! the binary tensor / trace CSV file formats behind the `cpd` CLI.

mod config;
mod error;
mod gen;
mod io;
mod matmul;
mod mc;
mod noise;
mod pipeline;

pub use config::{CollinearitySpec, ExperimentConfig, InitKind, Scenario, WeightScheme};
pub use error::HarnessError;
pub use gen::{gen_collinear_factors, gen_paper_tensor};
pub use io::{read_tensor, write_tensor, write_trace_csv};
pub use matmul::{bilinear_map, gen_matmul_tensor, MatmulSpec};
pub use mc::{run_monte_carlo, McReport, PipelineSummary, TrialOutcome, SUCCESS_THRESHOLDS};
pub use noise::add_noise;
pub use pipeline::{run_pipeline, PipelineSpec, Stage, StageOutcome};

/// SplitMix64 step, used to derive independent per-trial and per-mode seeds
/// from a master seed.
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
