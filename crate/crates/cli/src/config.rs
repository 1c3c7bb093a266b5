//! Benchmark configuration: one JSON document drives the whole pipeline.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use netrecon_core::bayes::GPolicy;
use netrecon_core::dataset::{default_lag, FormulationSpec, PredictorSet, ResponseKind};
use netrecon_core::sim::{SamplingPlan, DEFAULT_STEP};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    /// Path to the ODE network model JSON.
    pub model: PathBuf,
    /// Sampling timestamps in minutes.
    #[serde(default = "SamplingPlan::default_uneven_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_snr")]
    pub snr: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Formulation variants to run; empty means the full 2x2x2 grid.
    #[serde(default)]
    pub variants: Vec<FormulationSpec>,
    #[serde(default = "default_d_max")]
    pub d_max: usize,
    #[serde(default)]
    pub g: GPolicy,
    /// Significance level for the grow-shrink baseline.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub out: PathBuf,
    /// Worker threads for replicate-variant cells; 0 means all cores.
    #[serde(default)]
    pub workers: usize,
    /// Integration step in minutes.
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_snr() -> f64 {
    20.0
}
fn default_replicates() -> usize {
    100
}
fn default_d_max() -> usize {
    2
}
fn default_alpha() -> f64 {
    0.05
}
fn default_step() -> f64 {
    DEFAULT_STEP
}

impl BenchmarkConfig {
    pub fn from_json_path(path: impl AsRef<std::path::Path>) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| HarnessError::Config(format!("cannot read config: {e}")))?;
        let config: BenchmarkConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("cannot parse config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.replicates < 1 {
            return Err(HarnessError::Config("replicates must be >= 1".into()));
        }
        if self.times.len() < 3 {
            return Err(HarnessError::Config("need at least 3 sampling times".into()));
        }
        if !(self.snr > 0.0) {
            return Err(HarnessError::Config("snr must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(HarnessError::Config("alpha must be in (0, 1)".into()));
        }
        if !(self.step > 0.0) {
            return Err(HarnessError::Config("step must be positive".into()));
        }
        Ok(())
    }

    pub fn sampling_plan(&self) -> SamplingPlan {
        SamplingPlan {
            times: self.times.clone(),
            snr: self.snr,
            seed: self.seed,
        }
    }

    /// The variants to run: the configured list, or the full response x
    /// predictor-set x lag grid with lag about a tenth of the sample count.
    pub fn effective_variants(&self) -> Vec<FormulationSpec> {
        if !self.variants.is_empty() {
            return self.variants.clone();
        }
        let lag = default_lag(self.times.len());
        let mut out = Vec::new();
        for response in [ResponseKind::EulerGradient, ResponseKind::ConventionalDbn] {
            for predictors in [PredictorSet::Standard, PredictorSet::Product] {
                for lagged in [None, Some(lag)] {
                    out.push(FormulationSpec::new(response, predictors, lagged));
                }
            }
        }
        out
    }
}
