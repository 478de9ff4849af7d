//! Experiment configuration, loadable from a flat key = value text file
//! (TOML sections: top level for schedule/seed, `[noise]` for the noise
//! model).

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::channels::NoiseModel;
use crate::qutrit::SignConvention;

/// How contexts are assigned to trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Deterministic cycle through the ordered context list.
    Cycle,
    /// Uniform random context per trial, the assumption of the hypothesis
    /// test.
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of accepted trials to record.
    pub trials: u64,
    /// RNG seed; fixed before the run, drives all randomness.
    pub seed: u64,
    #[serde(default)]
    pub schedule: ScheduleMode,
    /// Also run the five reversed-order contexts (needed for the
    /// incompatibility columns of the analysis).
    #[serde(default = "default_true")]
    pub include_reversed: bool,
    #[serde(default)]
    pub sign_convention: SignConvention,
    pub noise: NoiseModel,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn noiseless(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            schedule: ScheduleMode::default(),
            include_reversed: true,
            sign_convention: SignConvention::default(),
            noise: NoiseModel::noiseless(),
        }
    }

    pub fn calibrated(trials: u64, seed: u64) -> Self {
        Self {
            noise: NoiseModel::calibrated(),
            ..Self::noiseless(trials, seed)
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.trials == 0 {
            return Err(ProtocolError::Config("trials must be >= 1".into()));
        }
        self.noise.validate()?;
        Ok(())
    }

    /// Parses the TOML config text; syntax and unknown-key errors carry
    /// line/column positions.
    pub fn from_toml_str(text: &str) -> Result<Self, ProtocolError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| ProtocolError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
