use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::forward::MAX_DEGREE_BUCKET;
use super::{GnnError, Task};
use crate::autodiff::Tensor;
use crate::molgraph::{AtomVocabulary, BondOrder};
use crate::rng::sample_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Nfp,
    Ggnn,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Nfp => "nfp",
            ModelKind::Ggnn => "ggnn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nfp" => Ok(ModelKind::Nfp),
            "ggnn" => Ok(ModelKind::Ggnn),
            other => Err(format!("unknown model kind `{other}` (expected nfp or ggnn)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    /// Width of the embedding and of every node state.
    pub hidden: usize,
    /// Width of the molecule-level representation fed to the head.
    pub readout: usize,
    pub rounds: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Self {
            hidden: 32,
            readout: 32,
            rounds: 3,
        }
    }
}

pub(crate) fn bond_name(order: BondOrder) -> &'static str {
    match order {
        BondOrder::Single => "single",
        BondOrder::Double => "double",
        BondOrder::Triple => "triple",
        BondOrder::Aromatic => "aromatic",
    }
}

/// Weights of a trained (or freshly initialised) model.
///
/// Tensors are stored by name; [`ModelParams::expected_shapes`] lists the
/// names and shapes each architecture needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub task: Task,
    pub vocab: AtomVocabulary,
    pub dims: Dims,
    /// Probability of zeroing a node-state entry, in `[0, 1)`.
    pub dropout_rate: f64,
    tensors: BTreeMap<String, Tensor>,
}

impl ModelParams {
    /// Random initial weights: embedding rows from a standard normal, weight
    /// matrices from `N(0, 1/fan_in)`, biases zero.
    pub fn init(
        kind: ModelKind,
        task: Task,
        vocab: AtomVocabulary,
        dims: Dims,
        dropout_rate: f64,
        seed: u64,
    ) -> Result<Self, GnnError> {
        validate(dims, dropout_rate)?;
        let shapes = expected_shapes(kind, dims, vocab.table_size());
        let mut tensors = BTreeMap::new();
        for (i, (name, [rows, cols])) in shapes.into_iter().enumerate() {
            let mut rng = sample_rng(seed, i as u64);
            let tensor = if name.ends_with("bias") {
                Tensor::zeros(rows, cols)
            } else {
                let scale = if name == "embedding" { 1.0 } else { (rows as f64).sqrt().recip() };
                let data = (0..rows * cols)
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                Tensor::new(rows, cols, data)?
            };
            tensors.insert(name, tensor);
        }
        Ok(Self {
            kind,
            task,
            vocab,
            dims,
            dropout_rate,
            tensors,
        })
    }

    /// Assembles parameters from named tensors, checking names and shapes.
    pub fn from_parts(
        kind: ModelKind,
        task: Task,
        vocab: AtomVocabulary,
        dims: Dims,
        dropout_rate: f64,
        tensors: BTreeMap<String, Tensor>,
    ) -> Result<Self, GnnError> {
        validate(dims, dropout_rate)?;
        let shapes = expected_shapes(kind, dims, vocab.table_size());
        for (name, shape) in &shapes {
            match tensors.get(name) {
                None => return Err(GnnError::Format(format!("missing tensor `{name}`"))),
                Some(t) if t.shape() != *shape => {
                    return Err(GnnError::Format(format!(
                        "tensor `{name}` has shape {:?}, expected {shape:?}",
                        t.shape()
                    )))
                }
                Some(_) => {}
            }
        }
        if let Some(extra) = tensors.keys().find(|k| !shapes.contains_key(*k)) {
            return Err(GnnError::Format(format!("unexpected tensor `{extra}`")));
        }
        Ok(Self {
            kind,
            task,
            vocab,
            dims,
            dropout_rate,
            tensors,
        })
    }

    pub fn expected_shapes(&self) -> BTreeMap<String, [usize; 2]> {
        expected_shapes(self.kind, self.dims, self.vocab.table_size())
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn tensors(&self) -> &BTreeMap<String, Tensor> {
        &self.tensors
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut BTreeMap<String, Tensor> {
        &mut self.tensors
    }

    pub fn embedding(&self) -> &Tensor {
        &self.tensors["embedding"]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }
}

fn validate(dims: Dims, dropout_rate: f64) -> Result<(), GnnError> {
    if dims.hidden == 0 || dims.readout == 0 || dims.rounds == 0 {
        return Err(GnnError::Config(format!("dimensions must be positive, got {dims:?}")));
    }
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(GnnError::Config(format!("dropout rate {dropout_rate} outside [0, 1)")));
    }
    Ok(())
}

fn expected_shapes(kind: ModelKind, dims: Dims, table_size: usize) -> BTreeMap<String, [usize; 2]> {
    let Dims { hidden: d, readout: r, rounds } = dims;
    let mut s = BTreeMap::new();
    s.insert("embedding".to_string(), [table_size, d]);
    s.insert("head.weight".to_string(), [r, 1]);
    s.insert("head.bias".to_string(), [1, 1]);
    match kind {
        ModelKind::Nfp => {
            for l in 0..rounds {
                for k in 1..=MAX_DEGREE_BUCKET {
                    s.insert(format!("conv{l}.deg{k}.weight"), [d, d]);
                    s.insert(format!("conv{l}.deg{k}.bias"), [1, d]);
                }
                s.insert(format!("readout{l}.weight"), [d, r]);
                s.insert(format!("readout{l}.bias"), [1, r]);
            }
        }
        ModelKind::Ggnn => {
            for order in BondOrder::ALL {
                s.insert(format!("message.{}", bond_name(order)), [d, d]);
            }
            for gate in ["z", "r", "h"] {
                s.insert(format!("gru.w{gate}"), [d, d]);
                s.insert(format!("gru.u{gate}"), [d, d]);
                s.insert(format!("gru.{gate}.bias"), [1, d]);
            }
            s.insert("readout.gate_final".to_string(), [d, r]);
            s.insert("readout.gate_initial".to_string(), [d, r]);
            s.insert("readout.gate.bias".to_string(), [1, r]);
            s.insert("readout.proj".to_string(), [d, r]);
            s.insert("readout.proj.bias".to_string(), [1, r]);
        }
    }
    s
}
