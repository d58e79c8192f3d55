use rand::Rng;

use crate::autodiff::Tensor;

/// One realisation of the dropout noise: a 0/1 mask per round plus the
/// factor that multiplies every kept entry.
///
/// Sampled sets use inverted scaling `1/(1-p)`, so at `p = 0` a sampled set
/// is all ones with scale 1 and leaves the network unchanged bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMaskSet {
    masks: Vec<Tensor>,
    scale: f64,
}

impl DropoutMaskSet {
    /// All ones, scale 1: the network with dropout switched off.
    pub fn identity(atoms: usize, hidden: usize, rounds: usize) -> Self {
        Self {
            masks: vec![Tensor::ones(atoms, hidden); rounds],
            scale: 1.0,
        }
    }

    /// Keeps each entry independently with probability `1 - rate`.
    pub fn sample(atoms: usize, hidden: usize, rounds: usize, rate: f64, rng: &mut impl Rng) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate {rate} outside [0, 1)");
        let keep = 1.0 - rate;
        let masks = (0..rounds)
            .map(|_| {
                let data = (0..atoms * hidden)
                    .map(|_| if rng.random::<f64>() < keep { 1.0 } else { 0.0 })
                    .collect();
                Tensor::new(atoms, hidden, data).expect("finite mask")
            })
            .collect();
        Self { masks, scale: keep.recip() }
    }

    /// Masks from explicit tensors; entries must be 0 or 1.
    pub fn from_masks(masks: Vec<Tensor>, scale: f64) -> Self {
        Self { masks, scale }
    }

    pub fn masks(&self) -> &[Tensor] {
        &self.masks
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rounds(&self) -> usize {
        self.masks.len()
    }
}
