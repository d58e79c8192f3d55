use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forward::{embed, forward_bound, score, Bound, GraphIndex};
use super::{Dims, DropoutMaskSet, GnnError, ModelKind, ModelParams, Task};
use crate::autodiff::{sigmoid, Tape, Tensor};
use crate::eval::{mean_absolute_error, pearson, roc_auc};
use crate::molgraph::{AtomVocabulary, MolecularGraph};
use crate::rng::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub task: Task,
    pub kind: ModelKind,
    pub dims: Dims,
    pub dropout_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults: 32-wide states, 3 rounds, dropout 0.25, Adam at 1e-3,
    /// batches of 32, 30 epochs, seed 0.
    pub fn new(task: Task, kind: ModelKind) -> Self {
        Self {
            task,
            kind,
            dims: Dims::default(),
            dropout_rate: 0.25,
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

/// Metrics after one epoch. Training metrics use deterministic predictions
/// (dropout off); `loss` is the mean training loss seen during the epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train_roc_auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train_mae: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train_pearson: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub valid_roc_auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub valid_mae: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub valid_pearson: Option<f64>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct Adam {
    lr: f64,
    step: i32,
    m: BTreeMap<String, Vec<f64>>,
    v: BTreeMap<String, Vec<f64>>,
}

impl Adam {
    fn new(lr: f64) -> Self {
        Self {
            lr,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    fn update(&mut self, params: &mut ModelParams, grads: &BTreeMap<String, Tensor>) {
        self.step += 1;
        let c1 = 1.0 - BETA1.powi(self.step);
        let c2 = 1.0 - BETA2.powi(self.step);
        for (name, tensor) in params.tensors_mut() {
            let Some(g) = grads.get(name) else { continue };
            let m = self.m.entry(name.clone()).or_insert_with(|| vec![0.0; g.len()]);
            let v = self.v.entry(name.clone()).or_insert_with(|| vec![0.0; g.len()]);
            for (((p, &g), m), v) in tensor.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Loss and its derivative with respect to the raw score.
fn loss(task: Task, f: f64, y: f64) -> (f64, f64) {
    match task {
        // softplus(f) - y f, written to stay finite for large |f|
        Task::Binary => (f.max(0.0) - f * y + (-f.abs()).exp().ln_1p(), sigmoid(f) - y),
        Task::Regression => ((f - y).powi(2), 2.0 * (f - y)),
    }
}

fn check_labels(data: &[(MolecularGraph, f64)], task: Task) -> Result<(), GnnError> {
    for (index, &(_, label)) in data.iter().enumerate() {
        let ok = match task {
            Task::Binary => label == 0.0 || label == 1.0,
            Task::Regression => label.is_finite(),
        };
        if !ok {
            return Err(GnnError::Label { index, label, task });
        }
    }
    Ok(())
}

struct Metrics {
    roc_auc: Option<f64>,
    mae: Option<f64>,
    pearson: Option<f64>,
}

fn metrics(params: &ModelParams, items: &[(GraphIndex, f64)]) -> Result<Metrics, GnnError> {
    let mut scores = Vec::with_capacity(items.len());
    for (idx, _) in items {
        scores.push(score(params, idx, &embed(idx.features(), params), None)?);
    }
    let labels: Vec<f64> = items.iter().map(|(_, y)| *y).collect();
    Ok(match params.task {
        Task::Binary => {
            let positive: Vec<bool> = labels.iter().map(|&y| y == 1.0).collect();
            Metrics {
                roc_auc: roc_auc(&scores, &positive).ok(),
                mae: None,
                pearson: None,
            }
        }
        Task::Regression => Metrics {
            roc_auc: None,
            mae: Some(mean_absolute_error(&scores, &labels)),
            pearson: pearson(&scores, &labels),
        },
    })
}

/// Fits a fresh model with Adam on mini-batches, resampling dropout masks
/// for every training forward pass.
///
/// The result depends only on the data, its order and `config`; the same
/// inputs give bit-identical weights.
pub fn train(
    data: &[(MolecularGraph, f64)],
    config: &TrainConfig,
    validation: Option<&[(MolecularGraph, f64)]>,
) -> Result<(ModelParams, Vec<EpochLog>), GnnError> {
    if data.is_empty() {
        return Err(GnnError::EmptyDataset);
    }
    if config.epochs == 0 || config.batch_size == 0 {
        return Err(GnnError::Config("epochs and batch size must be at least 1".into()));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(GnnError::Config(format!("learning rate {} must be positive", config.learning_rate)));
    }
    check_labels(data, config.task)?;
    if let Some(v) = validation {
        check_labels(v, config.task)?;
    }

    let vocab = AtomVocabulary::from_graphs(data.iter().map(|(g, _)| g));
    let mut params = ModelParams::init(
        config.kind,
        config.task,
        vocab,
        config.dims,
        config.dropout_rate,
        derive_seed(config.seed, 0),
    )?;
    if config.task == Task::Regression {
        let mean = data.iter().map(|(_, y)| y).sum::<f64>() / data.len() as f64;
        params.tensors_mut().insert("head.bias".into(), Tensor::scalar(mean)?);
    }

    let index = |set: &[(MolecularGraph, f64)]| -> Vec<(GraphIndex, f64)> {
        set.iter().map(|(g, y)| (GraphIndex::new(g, &params), *y)).collect()
    };
    let items = index(data);
    let valid = validation.map(index);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));
    let mut adam = Adam::new(config.learning_rate);
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    let (d, rounds) = (config.dims.hidden, config.dims.rounds);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads: BTreeMap<String, Tensor> = BTreeMap::new();
            for &sample in batch {
                let (idx, y) = &items[sample];
                let masks = (config.dropout_rate > 0.0)
                    .then(|| DropoutMaskSet::sample(idx.atoms(), d, rounds, config.dropout_rate, &mut rng));
                let abort = |detail: String| GnnError::NonFiniteLoss { epoch, sample, detail };

                let mut tape = Tape::new();
                let table = tape.leaf(params.embedding().clone());
                let bound = Bound::new(&mut tape, &params, true);
                let phi = tape.gather_rows(table, idx.features())?;
                let out = forward_bound(&mut tape, &params, &bound, idx, phi, masks.as_ref())
                    .map_err(|e| abort(e.to_string()))?;
                let f = tape.value(out).data()[0];
                let (l, dl) = loss(config.task, f, *y);
                if !l.is_finite() || !dl.is_finite() {
                    return Err(abort(format!("score {f}, label {y}")));
                }
                total += l;
                let mut g = tape
                    .backward_with_seed(out, dl / batch.len() as f64)
                    .map_err(|e| abort(e.to_string()))?;
                let named = bound
                    .iter()
                    .map(|(name, &v)| (name.as_str(), v))
                    .chain(std::iter::once(("embedding", table)));
                for (name, v) in named {
                    let gv = g.take(v).expect("leaf gradient");
                    match grads.get_mut(name) {
                        Some(acc) => acc.add_assign(&gv),
                        None => {
                            grads.insert(name.to_string(), gv);
                        }
                    }
                }
            }
            adam.update(&mut params, &grads);
        }

        let train_metrics = metrics(&params, &items)?;
        let valid_metrics = valid.as_ref().map(|v| metrics(&params, v)).transpose()?;
        log.push(EpochLog {
            epoch,
            loss: total / items.len() as f64,
            train_roc_auc: train_metrics.roc_auc,
            train_mae: train_metrics.mae,
            train_pearson: train_metrics.pearson,
            valid_roc_auc: valid_metrics.as_ref().and_then(|m| m.roc_auc),
            valid_mae: valid_metrics.as_ref().and_then(|m| m.mae),
            valid_pearson: valid_metrics.as_ref().and_then(|m| m.pearson),
        });
    }
    Ok((params, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn tiny() -> Vec<(MolecularGraph, f64)> {
        [
            ("c1ccncc1", 1.0),
            ("Cc1ccncc1", 1.0),
            ("c1ccncc1O", 1.0),
            ("CCc1cccnc1", 1.0),
            ("c1ccccc1", 0.0),
            ("CCO", 0.0),
            ("CC(=O)N", 0.0),
            ("c1ccsc1", 0.0),
            ("C1CCCCC1", 0.0),
            ("c1cncnc1C", 0.0),
        ]
        .iter()
        .map(|(s, y)| (parse_smiles(s).unwrap(), *y))
        .collect()
    }

    #[test]
    fn stable_logistic_loss() {
        let (l, d) = loss(Task::Binary, 800.0, 1.0);
        assert_eq!(l, 0.0);
        assert_eq!(d, 0.0);
        let (l, d) = loss(Task::Binary, -800.0, 1.0);
        assert_eq!(l, 800.0);
        assert_eq!(d, -1.0);
        let (l, _) = loss(Task::Binary, 0.0, 0.0);
        assert!((l - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn overfits_ten_samples() {
        for kind in [ModelKind::Nfp, ModelKind::Ggnn] {
            let config = TrainConfig {
                epochs: 150,
                batch_size: 5,
                learning_rate: 1e-2,
                dropout_rate: 0.0,
                ..TrainConfig::new(Task::Binary, kind)
            };
            let (_, log) = train(&tiny(), &config, None).unwrap();
            let last = log.last().unwrap();
            assert!(last.loss < 0.05, "{kind}: {}", last.loss);
            assert_eq!(last.train_roc_auc, Some(1.0));
        }
    }

    #[test]
    fn same_seed_same_weights() {
        let config = TrainConfig {
            epochs: 2,
            ..TrainConfig::new(Task::Binary, ModelKind::Ggnn)
        };
        let (a, la) = train(&tiny(), &config, None).unwrap();
        let (b, lb) = train(&tiny(), &config, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        let (c, _) = train(&tiny(), &TrainConfig { seed: 1, ..config }, None).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_labels_and_config() {
        let mut data = tiny();
        data[3].1 = 0.5;
        let config = TrainConfig::new(Task::Binary, ModelKind::Nfp);
        assert!(matches!(train(&data, &config, None), Err(GnnError::Label { index: 3, .. })));
        assert!(matches!(train(&[], &config, None), Err(GnnError::EmptyDataset)));
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..config
        };
        assert!(matches!(train(&tiny(), &bad, None), Err(GnnError::Config(_))));
    }
}
