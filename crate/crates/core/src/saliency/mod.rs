//! Gradient-based atom importance.
//!
//! Every estimator differentiates the raw model score with respect to the
//! node feature matrix `φ` and turns row `i` of that gradient into a score
//! for atom `i`:
//!
//! | method | averaged over |
//! |---|---|
//! | [`vanilla_grad`] | nothing |
//! | [`smooth_grad`] | Gaussian noise added to `φ` |
//! | [`bayes_grad`] | dropout masks (MC-dropout weight samples) |
//! | [`bayes_smooth_grad`] | both |
//!
//! Unsigned scores are row norms averaged over samples. [`signed_scores`]
//! instead averages the gradient rows and takes one inner product with the
//! displacement `φ_i - b_i` from a baseline.
//!
//! Sample `s` of an estimator always draws from its own sub-stream of the
//! seed, and sample results are reduced in index order, so results are
//! bit-identical for any thread count.
//!
//! ```
//! use graphsal::molgraph::{parse_smiles, AtomVocabulary};
//! use graphsal::saliency::{signed_scores, vanilla_grad, Estimator, LinearSurrogate, Norm};
//!
//! let mol = parse_smiles("c1ccncc1O")?;
//! let vocab = AtomVocabulary::from_graphs([&mol]);
//! let model = LinearSurrogate::seeded(vocab, 4, 1);
//! let plain = vanilla_grad(&model, &mol, Norm::L2)?;
//! assert_eq!(plain.scores.len(), 7);
//! let signed = signed_scores(&model, &mol, None, &Estimator::vanilla())?;
//! let total: f64 = signed.scores.iter().sum();
//! assert!((total - model.displacement_effect(&mol)).abs() < 1e-12);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

mod estimate;
mod linear;
mod result;

pub use estimate::{
    bayes_grad, bayes_smooth_grad, explain, gradient_at, sample_masks_for, signed_scores, smooth_grad, vanilla_grad,
    Estimator, Method, Norm, SmoothSpec, MASK_STREAM, NOISE_STREAM,
};
pub use linear::LinearSurrogate;
pub use result::{EstimatorParams, SaliencyResult, SCORES_FORMAT_VERSION};

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autodiff::Tensor;
use crate::gnn::{self, DropoutMaskSet, GnnError, GraphIndex, ModelParams};
use crate::molgraph::MolecularGraph;

#[derive(Debug, Error)]
pub enum SaliencyError {
    #[error(transparent)]
    Model(#[from] GnnError),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("noise level sigma must be finite and non-negative, got {0}")]
    BadSigma(f64),
    #[error("baseline has shape {found:?}, feature matrix has {expected:?}")]
    BaselineShape { expected: [usize; 2], found: [usize; 2] },
    #[error("scores file: {0}")]
    Format(String),
}

/// A scalar-output model whose input is a per-atom feature matrix.
pub trait SaliencyModel: Sync {
    /// Per-molecule data computed once and shared by every sample.
    type Prepared: Sync;

    fn prepare(&self, graph: &MolecularGraph) -> Self::Prepared;

    /// The unperturbed feature matrix `φ` (atoms × features).
    fn features(&self, prepared: &Self::Prepared) -> Tensor;

    /// One random weight realisation, or `None` for a model without dropout.
    fn sample_masks(&self, prepared: &Self::Prepared, rng: &mut ChaCha8Rng) -> Option<DropoutMaskSet>;

    /// Raw score at `phi` and its gradient with respect to `phi`.
    fn score_and_gradient(
        &self,
        prepared: &Self::Prepared,
        phi: &Tensor,
        masks: Option<&DropoutMaskSet>,
    ) -> Result<(f64, Tensor), SaliencyError>;
}

impl SaliencyModel for ModelParams {
    type Prepared = GraphIndex;

    fn prepare(&self, graph: &MolecularGraph) -> GraphIndex {
        GraphIndex::new(graph, self)
    }

    fn features(&self, prepared: &GraphIndex) -> Tensor {
        gnn::embed(prepared.features(), self)
    }

    fn sample_masks(&self, prepared: &GraphIndex, rng: &mut ChaCha8Rng) -> Option<DropoutMaskSet> {
        Some(DropoutMaskSet::sample(
            prepared.atoms(),
            self.dims.hidden,
            self.dims.rounds,
            self.dropout_rate,
            rng,
        ))
    }

    fn score_and_gradient(
        &self,
        prepared: &GraphIndex,
        phi: &Tensor,
        masks: Option<&DropoutMaskSet>,
    ) -> Result<(f64, Tensor), SaliencyError> {
        Ok(gnn::score_and_gradient(self, prepared, phi, masks)?)
    }
}
