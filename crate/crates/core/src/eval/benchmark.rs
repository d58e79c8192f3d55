use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{per_molecule_average_auc, prc_auc, saliency_pr_curve, EvalError, PrCurve};
use crate::gnn::{train, TrainConfig};
use crate::molgraph::{match_motif, MolecularGraph};
use crate::rng::{derive_seed, sample_rng};
use crate::saliency::{explain, Estimator, Method, SaliencyModel};

pub const BENCHMARK_FORMAT_VERSION: &str = "1.0";

/// How per-molecule scores become one PRC-AUC value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// Normalize each molecule to `[0, 1]`, rank all atoms together.
    #[default]
    Pooled,
    /// One curve per molecule, AUC averaged.
    PerMoleculeAverage,
}

/// Motif atoms of every molecule that contains the motif, with the
/// molecule's position in `graphs`.
pub fn motif_truths(graphs: &[MolecularGraph], motif: &MolecularGraph) -> Vec<(usize, BTreeSet<usize>)> {
    graphs
        .iter()
        .enumerate()
        .filter_map(|(i, g)| {
            let atoms = match_motif(g, motif).atoms();
            (!atoms.is_empty()).then_some((i, atoms))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaliencyEvaluation {
    pub method: Method,
    pub pooling: Pooling,
    pub molecules: usize,
    /// Fraction of evaluated atoms that belong to the motif.
    pub positive_atom_rate: f64,
    pub prc_auc: f64,
    /// Pooled curve (also reported in per-molecule mode, for plotting).
    pub curve: PrCurve,
}

/// Scores every molecule with `estimator` and measures how well the
/// ranking recovers the ground-truth atoms.
///
/// Molecule `k` uses the estimator seed mixed with `k`, so each molecule
/// gets its own random stream.
pub fn evaluate_saliency<M: SaliencyModel>(
    model: &M,
    molecules: &[(MolecularGraph, BTreeSet<usize>)],
    estimator: &Estimator,
    pooling: Pooling,
) -> Result<SaliencyEvaluation, EvalError> {
    if molecules.is_empty() {
        return Err(EvalError::NoPositives);
    }
    let scores = molecules
        .par_iter()
        .enumerate()
        .map(|(k, (g, _))| {
            let est = Estimator {
                seed: derive_seed(estimator.seed, k as u64),
                ..*estimator
            };
            explain(model, g, &est)
                .map(|r| r.scores)
                .map_err(|e| EvalError::Saliency(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let truths: Vec<BTreeSet<usize>> = molecules.iter().map(|(_, t)| t.clone()).collect();
    let curve = saliency_pr_curve(&scores, &truths)?;
    let auc = match pooling {
        Pooling::Pooled => prc_auc(&curve)?,
        Pooling::PerMoleculeAverage => per_molecule_average_auc(&scores, &truths)?,
    };
    Ok(SaliencyEvaluation {
        method: estimator.method,
        pooling,
        molecules: molecules.len(),
        positive_atom_rate: curve.positives as f64 / curve.total as f64,
        prc_auc: auc,
        curve,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkConfig {
    pub subset_size: usize,
    pub repeats: usize,
    /// One estimator per compared method, in report order. Seeds are
    /// replaced per repeat.
    pub estimators: Vec<Estimator>,
    /// Model and optimiser settings; the seed is replaced per repeat.
    pub train: TrainConfig,
    pub pooling: Pooling,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: Method,
    pub name: String,
    /// Mean over successful repeats.
    pub mean: Option<f64>,
    /// Sample standard deviation; needs two successful repeats.
    pub std: Option<f64>,
    /// PRC-AUC per repeat, `None` where the repeat failed.
    pub values: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub format_version: String,
    pub seed: u64,
    pub subset_size: usize,
    pub repeats: usize,
    pub pooling: Pooling,
    pub repeat_seeds: Vec<u64>,
    pub failed_repeats: Vec<usize>,
    pub eval_molecules: usize,
    pub positive_atom_rate: f64,
    pub rows: Vec<MethodRow>,
}

/// Trains one model per repeat on a random subset of `pool` and scores
/// every method on the same fixed `eval` molecules with that model.
///
/// Repeat `r` derives all of its randomness (subset, initialisation,
/// dropout, estimator draws) from `derive_seed(config.seed, r)`, and each
/// method's seed depends on the method rather than its position in
/// `config.estimators`. Repeats run in parallel; results land in indexed
/// slots. A repeat whose training fails is recorded in `failed_repeats`
/// and left out of the aggregates.
pub fn benchmark_run(
    pool: &[(MolecularGraph, f64)],
    eval: &[(MolecularGraph, BTreeSet<usize>)],
    config: &BenchmarkConfig,
) -> Result<BenchmarkReport, EvalError> {
    let repeat_seeds: Vec<u64> = (0..config.repeats).map(|r| derive_seed(config.seed, r as u64)).collect();
    benchmark_with_seeds(pool, eval, config, &repeat_seeds)
}

/// [`benchmark_run`] with explicit per-repeat seeds; `config.repeats` must
/// equal `repeat_seeds.len()`.
pub fn benchmark_with_seeds(
    pool: &[(MolecularGraph, f64)],
    eval: &[(MolecularGraph, BTreeSet<usize>)],
    config: &BenchmarkConfig,
    repeat_seeds: &[u64],
) -> Result<BenchmarkReport, EvalError> {
    if repeat_seeds.len() != config.repeats {
        return Err(EvalError::LengthMismatch {
            what: "repeat seeds",
            expected: config.repeats,
            found: repeat_seeds.len(),
        });
    }
    if config.repeats < 2 {
        return Err(EvalError::Config("at least two repeats are needed for a spread".into()));
    }
    if config.subset_size == 0 || pool.len() <= config.subset_size {
        return Err(EvalError::Config(format!(
            "subset size {} must be positive and below the pool size {}",
            config.subset_size,
            pool.len()
        )));
    }
    if config.estimators.is_empty() {
        return Err(EvalError::Config("no methods selected".into()));
    }
    for (i, e) in config.estimators.iter().enumerate() {
        if config.estimators[..i].iter().any(|o| o.method == e.method) {
            return Err(EvalError::Config(format!("method {} listed twice", e.method.cli_name())));
        }
    }
    if eval.is_empty() {
        return Err(EvalError::NoPositives);
    }

    let outcomes: Vec<Option<Vec<f64>>> = repeat_seeds
        .par_iter()
        .map(|&seed| run_repeat(pool, eval, config, seed))
        .collect::<Result<_, _>>()?;

    let failed_repeats: Vec<usize> = (0..config.repeats).filter(|&r| outcomes[r].is_none()).collect();
    let atoms: usize = eval.iter().map(|(g, _)| g.atom_count()).sum();
    let hits: usize = eval.iter().map(|(_, t)| t.len()).sum();
    let positive_atom_rate = hits as f64 / atoms as f64;
    let rows = config
        .estimators
        .iter()
        .enumerate()
        .map(|(m, est)| {
            let method = est.method;
            let values: Vec<Option<f64>> = outcomes.iter().map(|o| o.as_ref().map(|v| v[m])).collect();
            let ok: Vec<f64> = values.iter().flatten().copied().collect();
            // running mean: exact when every repeat agrees
            let mean = (!ok.is_empty())
                .then(|| ok.iter().enumerate().fold(0.0, |mu, (k, v)| mu + (v - mu) / (k + 1) as f64));
            let std = (ok.len() >= 2).then(|| {
                let mu = mean.expect("non-empty");
                (ok.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (ok.len() - 1) as f64).sqrt()
            });
            MethodRow {
                method,
                name: method.display_name().to_string(),
                mean,
                std,
                values,
            }
        })
        .collect();

    Ok(BenchmarkReport {
        format_version: BENCHMARK_FORMAT_VERSION.to_string(),
        seed: config.seed,
        subset_size: config.subset_size,
        repeats: config.repeats,
        pooling: config.pooling,
        repeat_seeds: repeat_seeds.to_vec(),
        failed_repeats,
        eval_molecules: eval.len(),
        positive_atom_rate,
        rows,
    })
}

// Ok(None) marks a failed training run; Err aborts the whole benchmark.
fn run_repeat(
    pool: &[(MolecularGraph, f64)],
    eval: &[(MolecularGraph, BTreeSet<usize>)],
    config: &BenchmarkConfig,
    seed: u64,
) -> Result<Option<Vec<f64>>, EvalError> {
    let mut rng = sample_rng(seed, 0);
    let mut picked = index::sample(&mut rng, pool.len(), config.subset_size).into_vec();
    picked.sort_unstable();
    let subset: Vec<(MolecularGraph, f64)> = picked.iter().map(|&i| pool[i].clone()).collect();
    let train_config = TrainConfig {
        seed: derive_seed(seed, 1),
        ..config.train.clone()
    };
    let Ok((model, _)) = train(&subset, &train_config, None) else {
        return Ok(None);
    };
    let mut out = Vec::with_capacity(config.estimators.len());
    for base in &config.estimators {
        let tag = Method::ALL.iter().position(|&m| m == base.method).expect("known method") as u64;
        let est = Estimator {
            seed: derive_seed(seed, 100 + tag),
            ..*base
        };
        let e = evaluate_saliency(&model, eval, &est, config.pooling)?;
        out.push(e.prc_auc);
    }
    Ok(Some(out))
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned text table: one row per method with mean ± std.
    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>18}", "Method", "PRC-AUC");
        for row in &self.rows {
            let cell = format!("{} ± {}", fmt(row.mean), fmt(row.std));
            let _ = writeln!(out, "{:<16} {:>18}", row.name, cell);
        }
        let ok = self.repeats - self.failed_repeats.len();
        let _ = writeln!(
            out,
            "{ok}/{} repeats succeeded, subset size {}, {} evaluation molecules, positive-atom rate {:.3}",
            self.repeats, self.subset_size, self.eval_molecules, self.positive_atom_rate
        );
        out
    }

    /// `method,repeat_0,...` matrix of per-repeat PRC-AUC; failed repeats
    /// are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for r in 0..self.repeats {
            let _ = write!(out, ",repeat_{r}");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(row.method.cli_name());
            for v in &row.values {
                out.push(',');
                if let Some(x) = v {
                    let _ = write!(out, "{x}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn failure_fraction(&self) -> f64 {
        self.failed_repeats.len() as f64 / self.repeats as f64
    }

    pub fn row(&self, method: Method) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}
