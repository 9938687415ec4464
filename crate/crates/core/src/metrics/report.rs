use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{RankPoint, SuccessRate};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Results of one experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub name: String,
    /// Difference-of-means curves keyed by bit or channel name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dm_curves: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rank_trajectory: Vec<RankPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<SuccessRate>,
    pub runtime_s: f64,
    /// Free-form results (recovered key, ranking, parameters).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub experiments: Vec<ExperimentRecord>,
}

impl Default for EvaluationReport {
    fn default() -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            experiments: Vec::new(),
        }
    }
}

impl EvaluationReport {
    pub fn push(&mut self, e: ExperimentRecord) {
        self.experiments.push(e);
    }

    /// Non-finite numbers (infinite SNR) are written as `null`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
