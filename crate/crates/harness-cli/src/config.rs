use serde::{Deserialize, Serialize};

use crate::pipeline::PipelineSpec;
use crate::HarnessError;

/// Named experiment scenarios; `ex2` reuses the `ex1` tensor (it differs
/// only in which solvers run on it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Ex1,
    Ex1b,
    Ex2,
    Ex4,
    ExBcd,
    ExMatmul,
    Custom,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s {
            "ex1" => Ok(Self::Ex1),
            "ex1b" => Ok(Self::Ex1b),
            "ex2" => Ok(Self::Ex2),
            "ex4" => Ok(Self::Ex4),
            "ex_bcd" | "exbcd" => Ok(Self::ExBcd),
            "ex_matmul" | "matmul" => Ok(Self::ExMatmul),
            "custom" => Ok(Self::Custom),
            other => Err(HarnessError::BadConfig(format!(
                "unknown scenario '{other}'"
            ))),
        }
    }
}

/// Pairwise correlation targets for the leading block of factor columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CollinearitySpec {
    /// Every pair in the block shares this inner product.
    Value(f64),
    /// Pairwise inner products drawn uniformly from the range.
    Range(f64, f64),
}

/// Weights of the ground-truth rank-1 terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    Unit,
    /// `eta_r = 10 r`.
    TimesTen,
    Custom(Vec<f64>),
}

/// How pipelines draw their starting model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Random,
    /// The `[I, 1...]` identity-plus-ones pattern.
    IdentityOnes,
}

/// Full description of a benchmark run, serializable as JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Mode extents; cubic scenarios accept a single entry.
    #[serde(default)]
    pub dims: Vec<usize>,
    pub rank: usize,
    #[serde(default)]
    pub collinearity: Option<CollinearitySpec>,
    /// Leading collinear columns per factor; defaults to the mode extent.
    #[serde(default)]
    pub collinear_block: Option<usize>,
    #[serde(default)]
    pub weights: Option<WeightScheme>,
    /// Matrix-multiplication sizes for the `ex_matmul` scenario.
    #[serde(default)]
    pub matmul: Option<(usize, usize, usize)>,
    pub pipelines: Vec<PipelineSpec>,
    pub num_trials: usize,
    #[serde(default)]
    pub snr_db: Option<f64>,
    pub rng_seed: u64,
    #[serde(default)]
    pub init: Option<InitKind>,
    /// Success-table CSV destination (stdout when absent).
    #[serde(default)]
    pub output: Option<String>,
    /// Directory for per-trial trace CSVs (skipped when absent).
    #[serde(default)]
    pub traces_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.num_trials == 0 {
            return Err(HarnessError::BadConfig("num_trials must be >= 1".into()));
        }
        if self.rank == 0 && self.scenario != Scenario::ExMatmul {
            return Err(HarnessError::BadConfig("rank must be >= 1".into()));
        }
        if self.pipelines.is_empty() {
            return Err(HarnessError::BadConfig(
                "at least one pipeline is required".into(),
            ));
        }
        if let Some(CollinearitySpec::Range(lo, hi)) = &self.collinearity {
            if !(lo <= hi && *lo > -1.0 && *hi < 1.0) {
                return Err(HarnessError::BadConfig(
                    "collinearity range must satisfy -1 < lo <= hi < 1".into(),
                ));
            }
        }
        Ok(())
    }
}
