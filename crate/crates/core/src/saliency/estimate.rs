use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EstimatorParams, SaliencyError, SaliencyModel, SaliencyResult, SCORES_FORMAT_VERSION};
use crate::autodiff::Tensor;
use crate::gnn::DropoutMaskSet;
use crate::molgraph::{write_smiles, MolecularGraph};
use crate::rng::{derive_seed, sample_rng};

/// Stream tags passed to [`derive_seed`] for the two noise sources.
pub const MASK_STREAM: u64 = 0x6d61_736b;
pub const NOISE_STREAM: u64 = 0x6e6f_6973;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    #[default]
    L2,
}

impl Norm {
    fn apply(self, row: &[f64]) -> f64 {
        match self {
            Norm::L1 => row.iter().map(|x| x.abs()).sum(),
            Norm::L2 => row.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }
}

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            _ => Err(format!("unknown norm `{s}` (expected l1 or l2)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Vanilla,
    Smooth,
    Bayes,
    BayesSmooth,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Vanilla, Method::Smooth, Method::Bayes, Method::BayesSmooth];

    /// Name used in reports: `VanillaGrad`, `SmoothGrad`, ...
    pub fn display_name(self) -> &'static str {
        match self {
            Method::Vanilla => "VanillaGrad",
            Method::Smooth => "SmoothGrad",
            Method::Bayes => "BayesGrad",
            Method::BayesSmooth => "BayesSmoothGrad",
        }
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            Method::Vanilla => "vanilla",
            Method::Smooth => "smooth",
            Method::Bayes => "bayes",
            Method::BayesSmooth => "bayes-smooth",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.cli_name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected vanilla, smooth, bayes or bayes-smooth)"))
    }
}

/// Noise level and draw count for SmoothGrad.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothSpec {
    pub sigma: f64,
    pub samples: usize,
}

impl SmoothSpec {
    fn validate(self) -> Result<Self, SaliencyError> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(SaliencyError::BadSigma(self.sigma));
        }
        if self.samples == 0 {
            return Err(SaliencyError::NoSamples);
        }
        Ok(self)
    }
}

/// A fully specified estimator, as selected on the command line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimator {
    pub method: Method,
    /// Noise draws (smooth, bayes-smooth) or mask draws (bayes).
    pub samples: usize,
    /// Mask draws for bayes-smooth.
    pub mask_samples: usize,
    pub sigma: f64,
    pub norm: Norm,
    pub seed: u64,
}

impl Estimator {
    pub fn vanilla() -> Self {
        Self {
            method: Method::Vanilla,
            samples: 1,
            mask_samples: 1,
            sigma: 0.0,
            norm: Norm::L2,
            seed: 0,
        }
    }

    pub fn smooth(sigma: f64, samples: usize, seed: u64) -> Self {
        Self {
            method: Method::Smooth,
            samples,
            sigma,
            seed,
            ..Self::vanilla()
        }
    }

    pub fn bayes(samples: usize, seed: u64) -> Self {
        Self {
            method: Method::Bayes,
            samples,
            seed,
            ..Self::vanilla()
        }
    }

    pub fn bayes_smooth(sigma: f64, samples: usize, mask_samples: usize, seed: u64) -> Self {
        Self {
            method: Method::BayesSmooth,
            samples,
            mask_samples,
            sigma,
            seed,
            ..Self::vanilla()
        }
    }

    /// Full-size defaults for `method`: σ = 0.15, 100 draws, and 10 × 10
    /// draws for the combined estimator.
    pub fn defaults_for(method: Method, seed: u64) -> Self {
        match method {
            Method::Vanilla => Self { seed, ..Self::vanilla() },
            Method::Smooth => Self::smooth(0.15, 100, seed),
            Method::Bayes => Self::bayes(100, seed),
            Method::BayesSmooth => Self::bayes_smooth(0.15, 10, 10, seed),
        }
    }

    pub fn with_norm(self, norm: Norm) -> Self {
        Self { norm, ..self }
    }

    fn plan(&self) -> Result<Plan, SaliencyError> {
        let noise = |samples| {
            SmoothSpec {
                sigma: self.sigma,
                samples,
            }
            .validate()
            .map(|s| (s.sigma, s.samples))
        };
        let draws = |n: usize| if n == 0 { Err(SaliencyError::NoSamples) } else { Ok(n) };
        Ok(match self.method {
            Method::Vanilla => Plan { masks: None, noise: None },
            Method::Smooth => Plan {
                masks: None,
                noise: Some(noise(self.samples)?),
            },
            Method::Bayes => Plan {
                masks: Some(draws(self.samples)?),
                noise: None,
            },
            Method::BayesSmooth => Plan {
                masks: Some(draws(self.mask_samples)?),
                noise: Some(noise(self.samples)?),
            },
        })
    }

    fn params(&self) -> EstimatorParams {
        let (samples, sigma) = match self.method {
            Method::Vanilla => (1, 0.0),
            Method::Bayes => (self.samples, 0.0),
            Method::Smooth | Method::BayesSmooth => (self.samples, self.sigma),
        };
        EstimatorParams {
            samples,
            mask_samples: (self.method == Method::BayesSmooth).then_some(self.mask_samples),
            sigma,
            norm: self.norm,
            seed: self.seed,
        }
    }
}

struct Plan {
    masks: Option<usize>,
    noise: Option<(f64, usize)>,
}

enum Reduce<'a> {
    Norm(Norm),
    /// Displacement `φ - b`.
    Signed(&'a Tensor),
}

/// The dropout masks used by mask draw `draw` of an estimator seeded with
/// `seed`.
pub fn sample_masks_for<M: SaliencyModel>(
    model: &M,
    graph: &MolecularGraph,
    seed: u64,
    draw: usize,
) -> Option<DropoutMaskSet> {
    let prepared = model.prepare(graph);
    model.sample_masks(&prepared, &mut sample_rng(derive_seed(seed, MASK_STREAM), draw as u64))
}

/// `∂f/∂φ` at the unperturbed features.
pub fn gradient_at<M: SaliencyModel>(
    model: &M,
    graph: &MolecularGraph,
    masks: Option<&DropoutMaskSet>,
) -> Result<Tensor, SaliencyError> {
    let prepared = model.prepare(graph);
    let phi = model.features(&prepared);
    Ok(model.score_and_gradient(&prepared, &phi, masks)?.1)
}

// Draw `s` uses mask stream `s / K` and noise stream `s % K`, so every mask
// draw sees the same K noise vectors. The mean is taken over noise first,
// then over masks; with a running mean, K identical draws average to
// exactly the single-draw value.
fn run<M: SaliencyModel>(
    model: &M,
    graph: &MolecularGraph,
    plan: &Plan,
    seed: u64,
    reduce: Reduce<'_>,
) -> Result<(Vec<f64>, Option<Vec<f64>>), SaliencyError> {
    let prepared = model.prepare(graph);
    let phi = model.features(&prepared);
    let n = phi.rows();
    let j_count = plan.masks.unwrap_or(1);
    let k_count = plan.noise.map_or(1, |(_, k)| k);
    let mask_seed = derive_seed(seed, MASK_STREAM);
    let noise_seed = derive_seed(seed, NOISE_STREAM);

    let grads = (0..j_count * k_count)
        .into_par_iter()
        .map(|s| {
            let (j, k) = (s / k_count, s % k_count);
            let masks = plan
                .masks
                .and_then(|_| model.sample_masks(&prepared, &mut sample_rng(mask_seed, j as u64)));
            let x = match plan.noise {
                Some((sigma, _)) => {
                    let mut rng = sample_rng(noise_seed, k as u64);
                    let data = phi
                        .data()
                        .iter()
                        .map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    Tensor::new(phi.rows(), phi.cols(), data).map_err(crate::gnn::GnnError::from)?
                }
                None => phi.clone(),
            };
            Ok(model.score_and_gradient(&prepared, &x, masks.as_ref())?.1)
        })
        .collect::<Result<Vec<Tensor>, SaliencyError>>()?;

    let per_sample: Vec<Vec<f64>> = grads
        .iter()
        .map(|g| match &reduce {
            Reduce::Norm(norm) => (0..n).map(|i| norm.apply(g.row(i))).collect(),
            Reduce::Signed(disp) => (0..n).map(|i| dot(disp.row(i), g.row(i))).collect(),
        })
        .collect();

    let scores = match &reduce {
        Reduce::Norm(_) => two_level_mean(&per_sample, k_count),
        Reduce::Signed(disp) => {
            let flat: Vec<Vec<f64>> = grads.iter().map(|g| g.data().to_vec()).collect();
            let g = two_level_mean(&flat, k_count);
            let d = phi.cols();
            (0..n).map(|i| dot(disp.row(i), &g[i * d..(i + 1) * d])).collect()
        }
    };
    let std = (per_sample.len() > 1).then(|| sample_std(&per_sample));
    Ok((scores, std))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn running_mean<'a>(rows: impl Iterator<Item = &'a [f64]>, width: usize) -> Vec<f64> {
    let mut mean = vec![0.0; width];
    for (count, row) in rows.enumerate() {
        let c = (count + 1) as f64;
        for (m, x) in mean.iter_mut().zip(row) {
            *m += (x - *m) / c;
        }
    }
    mean
}

fn two_level_mean(samples: &[Vec<f64>], group: usize) -> Vec<f64> {
    let width = samples[0].len();
    let inner: Vec<Vec<f64>> = samples
        .chunks(group)
        .map(|chunk| running_mean(chunk.iter().map(Vec::as_slice), width))
        .collect();
    running_mean(inner.iter().map(Vec::as_slice), width)
}

fn sample_std(samples: &[Vec<f64>]) -> Vec<f64> {
    let width = samples[0].len();
    let mean = running_mean(samples.iter().map(Vec::as_slice), width);
    let denom = (samples.len() - 1) as f64;
    (0..width)
        .map(|i| (samples.iter().map(|s| (s[i] - mean[i]).powi(2)).sum::<f64>() / denom).sqrt())
        .collect()
}

fn result(graph: &MolecularGraph, est: &Estimator, scores: Vec<f64>, std: Option<Vec<f64>>, signed: bool) -> SaliencyResult {
    SaliencyResult {
        format_version: SCORES_FORMAT_VERSION.to_string(),
        smiles: write_smiles(graph),
        method: est.method,
        params: est.params(),
        scores,
        std,
        signed,
    }
}

/// Unsigned scores for any estimator.
pub fn explain<M: SaliencyModel>(model: &M, graph: &MolecularGraph, est: &Estimator) -> Result<SaliencyResult, SaliencyError> {
    let (scores, std) = run(model, graph, &est.plan()?, est.seed, Reduce::Norm(est.norm))?;
    Ok(result(graph, est, scores, std, false))
}

/// `s_i = ‖∂f/∂φ_i‖` with dropout off.
pub fn vanilla_grad<M: SaliencyModel>(model: &M, graph: &MolecularGraph, norm: Norm) -> Result<SaliencyResult, SaliencyError> {
    explain(model, graph, &Estimator::vanilla().with_norm(norm))
}

/// Mean gradient norm over `spec.samples` draws of `φ + ε`,
/// `ε ~ N(0, σ²)` elementwise, with dropout off.
pub fn smooth_grad<M: SaliencyModel>(
    model: &M,
    graph: &MolecularGraph,
    spec: SmoothSpec,
    norm: Norm,
    seed: u64,
) -> Result<SaliencyResult, SaliencyError> {
    explain(model, graph, &Estimator::smooth(spec.sigma, spec.samples, seed).with_norm(norm))
}

/// Mean gradient norm over `samples` freshly drawn dropout mask sets.
pub fn bayes_grad<M: SaliencyModel>(
    model: &M,
    graph: &MolecularGraph,
    samples: usize,
    norm: Norm,
    seed: u64,
) -> Result<SaliencyResult, SaliencyError> {
    explain(model, graph, &Estimator::bayes(samples, seed).with_norm(norm))
}

/// Mean gradient norm over `mask_samples × spec.samples` pairs of dropout
/// masks and input noise.
pub fn bayes_smooth_grad<M: SaliencyModel>(
    model: &M,
    graph: &MolecularGraph,
    spec: SmoothSpec,
    mask_samples: usize,
    norm: Norm,
    seed: u64,
) -> Result<SaliencyResult, SaliencyError> {
    explain(
        model,
        graph,
        &Estimator::bayes_smooth(spec.sigma, spec.samples, mask_samples, seed).with_norm(norm),
    )
}

/// `(φ_i - b_i)ᵀ ḡ_i`, where `ḡ` is the gradient averaged the same way the
/// estimator averages norms. `baseline` defaults to zeros. The reported std
/// is over the per-draw inner products.
pub fn signed_scores<M: SaliencyModel>(
    model: &M,
    graph: &MolecularGraph,
    baseline: Option<&Tensor>,
    est: &Estimator,
) -> Result<SaliencyResult, SaliencyError> {
    let phi = model.features(&model.prepare(graph));
    let displacement = match baseline {
        None => phi,
        Some(b) if b.shape() == phi.shape() => phi.sub(b),
        Some(b) => {
            return Err(SaliencyError::BaselineShape {
                expected: phi.shape(),
                found: b.shape(),
            })
        }
    };
    let (scores, std) = run(model, graph, &est.plan()?, est.seed, Reduce::Signed(&displacement))?;
    Ok(result(graph, est, scores, std, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{Dims, ModelKind, ModelParams, Task};
    use crate::molgraph::{parse_smiles, AtomVocabulary};
    use crate::saliency::LinearSurrogate;

    fn gnn(kind: ModelKind, rate: f64) -> (ModelParams, MolecularGraph) {
        let g = parse_smiles("Cc1ccncc1C(=O)O").unwrap();
        let dims = Dims {
            hidden: 8,
            readout: 8,
            rounds: 2,
        };
        let p = ModelParams::init(kind, Task::Binary, AtomVocabulary::from_graphs([&g]), dims, rate, 4).unwrap();
        (p, g)
    }

    #[test]
    fn linear_surrogate_scores_are_weight_norm() {
        let g = parse_smiles("CCOc1ccccc1").unwrap();
        let m = LinearSurrogate::seeded(AtomVocabulary::from_graphs([&g]), 5, 2);
        let wn = m.weight.iter().map(|w| w * w).sum::<f64>().sqrt();
        for est in [Estimator::vanilla(), Estimator::smooth(0.7, 9, 1)] {
            let r = explain(&m, &g, &est).unwrap();
            assert!(r.scores.iter().all(|s| (s - wn).abs() < 1e-12), "{:?}", r.scores);
        }
    }

    #[test]
    fn zero_noise_and_zero_dropout_collapse_to_vanilla() {
        for kind in [ModelKind::Nfp, ModelKind::Ggnn] {
            let (p, g) = gnn(kind, 0.0);
            let v = vanilla_grad(&p, &g, Norm::L2).unwrap().scores;
            let s = smooth_grad(&p, &g, SmoothSpec { sigma: 0.0, samples: 5 }, Norm::L2, 3).unwrap().scores;
            let b = bayes_grad(&p, &g, 4, Norm::L2, 3).unwrap().scores;
            let bs = bayes_smooth_grad(&p, &g, SmoothSpec { sigma: 0.0, samples: 3 }, 3, Norm::L2, 3)
                .unwrap()
                .scores;
            let bits = |x: &[f64]| x.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&v), bits(&s));
            assert_eq!(bits(&v), bits(&b));
            assert_eq!(bits(&v), bits(&bs));
        }
    }

    #[test]
    fn bayes_with_one_draw_is_vanilla_of_that_draw() {
        let (p, g) = gnn(ModelKind::Ggnn, 0.3);
        let masks = sample_masks_for(&p, &g, 11, 0);
        let grad = gradient_at(&p, &g, masks.as_ref()).unwrap();
        let expected: Vec<f64> = (0..g.atom_count()).map(|i| Norm::L2.apply(grad.row(i))).collect();
        let r = bayes_grad(&p, &g, 1, Norm::L2, 11).unwrap();
        assert_eq!(r.scores, expected);
        assert!(r.std.is_none());
    }

    #[test]
    fn sigma_zero_bayes_smooth_equals_bayes() {
        let (p, g) = gnn(ModelKind::Nfp, 0.25);
        let b = bayes_grad(&p, &g, 6, Norm::L1, 5).unwrap();
        let bs = bayes_smooth_grad(&p, &g, SmoothSpec { sigma: 0.0, samples: 4 }, 6, Norm::L1, 5).unwrap();
        assert_eq!(b.scores, bs.scores);
    }

    #[test]
    fn zero_dropout_bayes_smooth_equals_smooth() {
        let (p, g) = gnn(ModelKind::Nfp, 0.0);
        let spec = SmoothSpec { sigma: 0.2, samples: 5 };
        let s = smooth_grad(&p, &g, spec, Norm::L2, 8).unwrap();
        let bs = bayes_smooth_grad(&p, &g, spec, 3, Norm::L2, 8).unwrap();
        assert_eq!(s.scores, bs.scores);
    }

    #[test]
    fn signed_zero_when_baseline_is_phi() {
        let (p, g) = gnn(ModelKind::Ggnn, 0.25);
        let phi = p.features(&p.prepare(&g));
        for est in [Estimator::vanilla(), Estimator::bayes(5, 1), Estimator::bayes_smooth(0.1, 3, 3, 2)] {
            let r = signed_scores(&p, &g, Some(&phi), &est).unwrap();
            assert!(r.scores.iter().all(|&s| s == 0.0));
            assert!(r.signed);
        }
        let bad = Tensor::zeros(2, 2);
        assert!(matches!(
            signed_scores(&p, &g, Some(&bad), &Estimator::vanilla()),
            Err(SaliencyError::BaselineShape { .. })
        ));
    }

    #[test]
    fn invalid_parameters() {
        let (p, g) = gnn(ModelKind::Nfp, 0.25);
        assert!(matches!(
            smooth_grad(&p, &g, SmoothSpec { sigma: -1.0, samples: 3 }, Norm::L2, 0),
            Err(SaliencyError::BadSigma(_))
        ));
        assert!(matches!(bayes_grad(&p, &g, 0, Norm::L2, 0), Err(SaliencyError::NoSamples)));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.cli_name().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.cli_name()));
        }
        assert!("grad".parse::<Method>().is_err());
    }
}
