use serde::{Deserialize, Serialize};

use super::{Method, Norm, SaliencyError};
use crate::schema::check_version;

pub const SCORES_FORMAT_VERSION: &str = "1.0";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorParams {
    /// Sample count: noise draws for SmoothGrad and BayesSmoothGrad, mask
    /// draws for BayesGrad, 1 for VanillaGrad.
    #[serde(rename = "M")]
    pub samples: usize,
    /// Mask draws of BayesSmoothGrad.
    #[serde(rename = "M_dropout", skip_serializing_if = "Option::is_none", default)]
    pub mask_samples: Option<usize>,
    pub sigma: f64,
    pub norm: Norm,
    pub seed: u64,
}

/// Per-atom scores of one molecule with everything needed to recompute
/// them from the same model file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaliencyResult {
    pub format_version: String,
    pub smiles: String,
    pub method: Method,
    pub params: EstimatorParams,
    pub scores: Vec<f64>,
    /// Per-atom sample standard deviation, present when more than one
    /// sample was drawn.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std: Option<Vec<f64>>,
    pub signed: bool,
}

impl SaliencyResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SaliencyError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: String,
        }
        let header: Header = serde_json::from_str(text).map_err(|e| SaliencyError::Format(e.to_string()))?;
        check_version(&header.format_version, SCORES_FORMAT_VERSION).map_err(|e| SaliencyError::Format(e.to_string()))?;
        serde_json::from_str(text).map_err(|e| SaliencyError::Format(e.to_string()))
    }
}
