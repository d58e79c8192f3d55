use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forward::{embed, score, GraphIndex};
use super::{DropoutMaskSet, GnnError, ModelParams};
use crate::molgraph::MolecularGraph;
use crate::rng::sample_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictMode {
    /// Dropout off.
    Deterministic,
    /// Mean and spread over `samples` independent dropout realisations.
    McDropout { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single sample.
    pub std: f64,
}

/// Raw score of `graph`, optionally averaged over MC-dropout samples.
///
/// Sample `j` draws its masks from stream `j` of `seed`, and the mean is
/// accumulated in sample order, so the thread count never changes the
/// result.
pub fn predict(params: &ModelParams, graph: &MolecularGraph, mode: PredictMode) -> Result<Prediction, GnnError> {
    let idx = GraphIndex::new(graph, params);
    let phi = embed(idx.features(), params);
    match mode {
        PredictMode::Deterministic => Ok(Prediction {
            mean: score(params, &idx, &phi, None)?,
            std: 0.0,
        }),
        PredictMode::McDropout { samples, seed } => {
            if samples == 0 {
                return Err(GnnError::NoSamples);
            }
            let (n, d, r) = (idx.atoms(), params.dims.hidden, params.dims.rounds);
            let values = (0..samples)
                .into_par_iter()
                .map(|j| {
                    let mut rng = sample_rng(seed, j as u64);
                    let masks = DropoutMaskSet::sample(n, d, r, params.dropout_rate, &mut rng);
                    score(params, &idx, &phi, Some(&masks))
                })
                .collect::<Result<Vec<f64>, GnnError>>()?;
            let (mean, std) = mean_std(&values);
            Ok(Prediction { mean, std })
        }
    }
}

/// Running mean (exact when all values are equal) and sample std.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    let std = if values.len() > 1 {
        (m2 / (values.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, std)
}
