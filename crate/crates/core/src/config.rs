//! Run-wide configuration shared by every pipeline stage.
//!
//! A run's full config is serializable; the feature sub-config's digest
//! is stamped into every feature file and trained model so mismatched
//! artifacts are rejected instead of silently combined. Flag and file
//! overrides happen at the CLI layer; this type is the merged result.

use serde::{Deserialize, Serialize};

use crate::classifier::{ModelConfig, SmoteConfig};
use crate::dsp::FeatureConfig;
use crate::postprocess::ScaleBounds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub model: ModelConfig,
    pub smote: SmoteConfig,
    pub clamp: ScaleBounds,
    pub duration_scale: f64,
    pub min_annotators: usize,
    /// Reject files whose inter-annotator kappa falls below this during
    /// aggregation. Off by default.
    pub min_kappa: Option<f64>,
    pub rng_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            features: FeatureConfig::default(),
            model: ModelConfig::default(),
            smote: SmoteConfig::default(),
            clamp: ScaleBounds::default(),
            duration_scale: 1.0,
            min_annotators: 3,
            min_kappa: None,
            rng_seed: 17,
        }
    }
}

impl PipelineConfig {
    /// Propagate the single run seed into the per-component seeds.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self.model.rng_seed = seed;
        self.smote.rng_seed = seed;
        self
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
