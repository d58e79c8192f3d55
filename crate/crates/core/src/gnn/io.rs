use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Dims, GnnError, ModelKind, ModelParams, Task};
use crate::autodiff::Tensor;
use crate::molgraph::AtomVocabulary;
use crate::schema::{check_version, VersionError};

pub const MODEL_FORMAT_VERSION: &str = "1.0";

/// On-disk layout of a model. Floats are written in shortest round-trip
/// form, so loading returns bit-identical weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: String,
    pub model_kind: ModelKind,
    pub task: Task,
    pub vocab: AtomVocabulary,
    pub dims: Dims,
    pub dropout_rate: f64,
    pub tensors: BTreeMap<String, Tensor>,
}

impl ModelParams {
    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION.to_string(),
            model_kind: self.kind,
            task: self.task,
            vocab: self.vocab.clone(),
            dims: self.dims,
            dropout_rate: self.dropout_rate,
            tensors: self.tensors().clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_file()).expect("model serializes");
        s.push('\n');
        s
    }

    /// Parses a model file. The version is checked before anything else so
    /// that files from a newer major release fail with a clear message.
    pub fn from_json(text: &str) -> Result<Self, GnnError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: String,
        }
        let header: Header = serde_json::from_str(text).map_err(|e| GnnError::Format(e.to_string()))?;
        check_version(&header.format_version, MODEL_FORMAT_VERSION).map_err(|e| match e {
            VersionError::Newer { found, supported } => GnnError::NewerFormat { found, supported },
            other => GnnError::Format(other.to_string()),
        })?;
        let file: ModelFile = serde_json::from_str(text).map_err(|e| GnnError::Format(e.to_string()))?;
        ModelParams::from_parts(
            file.model_kind,
            file.task,
            file.vocab,
            file.dims,
            file.dropout_rate,
            file.tensors,
        )
    }
}
