use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{SaliencyError, SaliencyModel};
use crate::autodiff::Tensor;
use crate::gnn::DropoutMaskSet;
use crate::molgraph::{featurize, AtomVocabulary, MolecularGraph};
use crate::rng::sample_rng;

/// `f(φ) = Σ_i wᵀφ_i + c` over embedded atoms.
///
/// Its gradient is `w` in every row, which makes it a reference model with
/// closed-form answers for every estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSurrogate {
    pub vocab: AtomVocabulary,
    /// One row per vocabulary entry plus the unknown row.
    pub embedding: Tensor,
    pub weight: Vec<f64>,
    pub bias: f64,
}

impl LinearSurrogate {
    /// Standard-normal embedding, weights and bias.
    pub fn seeded(vocab: AtomVocabulary, width: usize, seed: u64) -> Self {
        let mut rng = sample_rng(seed, 0);
        let mut normal = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.sample(StandardNormal)).collect() };
        let rows = vocab.table_size();
        let embedding = Tensor::new(rows, width, normal(rows * width)).expect("finite");
        let weight = normal(width);
        let bias = normal(1)[0];
        Self {
            vocab,
            embedding,
            weight,
            bias,
        }
    }

    pub fn width(&self) -> usize {
        self.weight.len()
    }

    pub fn score(&self, phi: &Tensor) -> f64 {
        let mut total = self.bias;
        for i in 0..phi.rows() {
            total += phi.row(i).iter().zip(&self.weight).map(|(x, w)| x * w).sum::<f64>();
        }
        total
    }

    /// `f(φ) - f(0)` for the molecule's own feature matrix.
    pub fn displacement_effect(&self, graph: &MolecularGraph) -> f64 {
        let phi = self.features(&self.prepare(graph));
        self.score(&phi) - self.score(&Tensor::zeros(phi.rows(), phi.cols()))
    }
}

impl SaliencyModel for LinearSurrogate {
    type Prepared = Vec<usize>;

    fn prepare(&self, graph: &MolecularGraph) -> Vec<usize> {
        featurize(graph, &self.vocab)
    }

    fn features(&self, prepared: &Vec<usize>) -> Tensor {
        let d = self.width();
        let mut data = Vec::with_capacity(prepared.len() * d);
        for &f in prepared {
            data.extend_from_slice(self.embedding.row(f));
        }
        Tensor::new(prepared.len(), d, data).expect("finite")
    }

    fn sample_masks(&self, _: &Vec<usize>, _: &mut ChaCha8Rng) -> Option<DropoutMaskSet> {
        None
    }

    fn score_and_gradient(
        &self,
        _: &Vec<usize>,
        phi: &Tensor,
        _: Option<&DropoutMaskSet>,
    ) -> Result<(f64, Tensor), SaliencyError> {
        let rows: Vec<f64> = (0..phi.rows()).flat_map(|_| self.weight.iter().copied()).collect();
        let grad = Tensor::new(phi.rows(), phi.cols(), rows).map_err(crate::gnn::GnnError::from)?;
        Ok((self.score(phi), grad))
    }
}
