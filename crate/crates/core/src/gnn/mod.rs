//! Graph convolutional models with dropout on node states.
//!
//! Two architectures share one parameter container:
//!
//! * [`ModelKind::Nfp`], a neural-fingerprint network. Each round sums an
//!   atom's state with its neighbours', multiplies by a weight matrix chosen
//!   by the atom's degree (buckets 1–4, higher degrees clamp to 4) and applies
//!   a sigmoid. After every round a softmax projection of each atom is added
//!   into the fingerprint.
//! * [`ModelKind::Ggnn`], a gated graph network with one message matrix per
//!   bond order, a GRU update shared across rounds and a gated sum readout.
//!
//! Both end in a linear head that returns the raw (pre-sigmoid) score. Dropout
//! is applied to the node states after every round through an explicit
//! [`DropoutMaskSet`], so a forward pass is a deterministic function of its
//! masks.
//!
//! ```
//! use graphsal::gnn::{predict, train, ModelKind, PredictMode, TrainConfig};
//! use graphsal::molgraph::{parse_smiles, Task};
//!
//! let data = vec![
//!     (parse_smiles("c1ccncc1")?, 1.0),
//!     (parse_smiles("CCO")?, 0.0),
//! ];
//! let config = TrainConfig { epochs: 2, ..TrainConfig::new(Task::Binary, ModelKind::Nfp) };
//! let (model, log) = train(&data, &config, None)?;
//! assert_eq!(log.len(), 2);
//! let p = predict(&model, &data[0].0, PredictMode::Deterministic)?;
//! assert_eq!(p.std, 0.0);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

mod dropout;
mod forward;
mod io;
mod params;
mod predict;
mod train;

pub use dropout::DropoutMaskSet;
pub use forward::{embed, forward, score, score_and_gradient, GraphIndex, MAX_DEGREE_BUCKET};
pub use io::{ModelFile, MODEL_FORMAT_VERSION};
pub use params::{Dims, ModelKind, ModelParams};
pub use predict::{predict, Prediction, PredictMode};
pub use train::{train, EpochLog, TrainConfig};

pub use crate::molgraph::Task;

use thiserror::Error;

use crate::autodiff::AutodiffError;

#[derive(Debug, Error)]
pub enum GnnError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("label {label} of sample {index} is not valid for a {task:?} task")]
    Label { index: usize, label: f64, task: Task },
    #[error("non-finite loss at epoch {epoch}, sample {sample}: {detail}")]
    NonFiniteLoss { epoch: usize, sample: usize, detail: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("model file: {0}")]
    Format(String),
    #[error("model file declares format {found}, newer than the supported {supported}")]
    NewerFormat { found: String, supported: String },
}
