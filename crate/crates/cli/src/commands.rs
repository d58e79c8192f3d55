use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use graphsal::eval::{
    benchmark_run, evaluate_saliency, motif_truths, BenchmarkConfig, EvalError, Pooling, SaliencyEvaluation,
};
use graphsal::gnn::{train as fit, Dims, EpochLog, ModelKind, ModelParams, TrainConfig};
use graphsal::molgraph::{
    default_decoys, generate_solubility_dataset, generate_synthetic_dataset, parse_smiles, read_dataset,
    write_dataset_to, write_smiles, MolecularGraph, Record, SolubilityConfig, SyntheticConfig, Task,
};
use graphsal::render::{render_svg, ColorScale, RenderSpec};
use graphsal::saliency::{explain as estimate, signed_scores, Estimator, Method};
use serde::Serialize;

use crate::output::{with_suffix, write_atomic};
use crate::{BenchmarkArgs, DatasetKind, EstimatorArgs, EvalArgs, ExplainArgs, GenerateArgs, ModelArgs, TrainArgs};

pub const METRICS_FORMAT_VERSION: &str = "1.0";
pub const EVAL_FORMAT_VERSION: &str = "1.0";

/// Policy: a benchmark with more failed repeats than this fraction exits
/// nonzero.
pub const MAX_FAILED_FRACTION: f64 = 0.2;

pub fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let rows: Vec<(String, f64)> = match args.kind {
        DatasetKind::Motif => {
            let motif = parse_smiles(&args.motif).with_context(|| format!("motif `{}`", args.motif))?;
            let mut config = SyntheticConfig {
                count: args.count,
                motif,
                positive_rate: args.positive_rate,
                seed: args.seed,
                decoys: default_decoys(),
                ..SyntheticConfig::pyridine(args.count, args.positive_rate, args.seed)
            };
            config.min_atoms = args.min_atoms.unwrap_or(config.min_atoms);
            config.max_atoms = args.max_atoms.unwrap_or(config.max_atoms);
            generate_synthetic_dataset(&config)?
                .iter()
                .map(|s| (write_smiles(&s.graph), if s.label { 1.0 } else { 0.0 }))
                .collect()
        }
        DatasetKind::Solubility => {
            let mut config = SolubilityConfig {
                count: args.count,
                seed: args.seed,
                ..SolubilityConfig::default()
            };
            config.min_atoms = args.min_atoms.unwrap_or(config.min_atoms);
            config.max_atoms = args.max_atoms.unwrap_or(config.max_atoms);
            generate_solubility_dataset(&config)?
                .iter()
                .map(|s| (write_smiles(&s.graph), s.value))
                .collect()
        }
    };
    let mut bytes = Vec::new();
    write_dataset_to(&mut bytes, &rows)?;
    write_atomic(&args.out, &bytes)?;
    eprintln!("wrote {} molecules to {}", rows.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn train_config(model: &ModelArgs, task: Task, seed: u64) -> TrainConfig {
    TrainConfig {
        dims: Dims {
            hidden: model.hidden,
            readout: model.readout,
            rounds: model.rounds,
        },
        dropout_rate: model.dropout,
        epochs: model.epochs,
        batch_size: model.batch_size,
        learning_rate: model.lr,
        seed,
        ..TrainConfig::new(task, model.model)
    }
}

fn load_dataset(path: &Path, task: Task) -> Result<Vec<Record>> {
    read_dataset(path, task).with_context(|| format!("reading dataset {}", path.display()))
}

fn pairs(records: &[Record]) -> Vec<(MolecularGraph, f64)> {
    records.iter().map(|r| (r.graph.clone(), r.label)).collect()
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    format_version: &'static str,
    task: Task,
    model_kind: ModelKind,
    train_size: usize,
    valid_size: usize,
    config: &'a TrainConfig,
    #[serde(rename = "final")]
    last: &'a EpochLog,
    epochs: &'a [EpochLog],
}

pub fn train(args: TrainArgs) -> Result<ExitCode> {
    if !(0.0..1.0).contains(&args.valid_fraction) {
        bail!("--valid-fraction must be in [0, 1), got {}", args.valid_fraction);
    }
    let records = load_dataset(&args.dataset, args.task)?;
    let data = pairs(&records);
    let n_valid = (data.len() as f64 * args.valid_fraction).floor() as usize;
    let (train_rows, valid_rows) = data.split_at(data.len() - n_valid);
    if train_rows.is_empty() {
        bail!("no rows left for training");
    }
    let config = train_config(&args.model, args.task, args.seed);
    let (model, log) = fit(train_rows, &config, (!valid_rows.is_empty()).then_some(valid_rows))?;
    write_atomic(&args.out, model.to_json().as_bytes())?;

    let last = log.last().context("training produced no epochs")?;
    let metrics = MetricsFile {
        format_version: METRICS_FORMAT_VERSION,
        task: args.task,
        model_kind: config.kind,
        train_size: train_rows.len(),
        valid_size: valid_rows.len(),
        config: &config,
        last,
        epochs: &log,
    };
    let metrics_path = args.metrics.unwrap_or_else(|| args.out.with_extension("metrics.json"));
    let mut text = serde_json::to_string_pretty(&metrics)?;
    text.push('\n');
    write_atomic(&metrics_path, text.as_bytes())?;

    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    match args.task {
        Task::Binary => println!(
            "epoch {}: loss {:.4}, train ROC-AUC {}, valid ROC-AUC {}",
            last.epoch,
            last.loss,
            fmt(last.train_roc_auc),
            fmt(last.valid_roc_auc)
        ),
        Task::Regression => println!(
            "epoch {}: loss {:.4}, train MAE {} r {}, valid MAE {} r {}",
            last.epoch,
            last.loss,
            fmt(last.train_mae),
            fmt(last.train_pearson),
            fmt(last.valid_mae),
            fmt(last.valid_pearson)
        ),
    }
    Ok(ExitCode::SUCCESS)
}

fn load_model(path: &Path) -> Result<ModelParams> {
    let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    ModelParams::from_json(&text).with_context(|| format!("loading model {}", path.display()))
}

fn estimator_for(method: Method, args: &EstimatorArgs) -> Estimator {
    let mut est = Estimator::defaults_for(method, args.seed).with_norm(args.norm);
    if method != Method::Vanilla {
        est.samples = args.samples.unwrap_or(est.samples);
        est.sigma = args.sigma.unwrap_or(est.sigma);
    }
    if method == Method::BayesSmooth {
        est.mask_samples = args.mask_samples.unwrap_or(est.mask_samples);
    }
    est
}

pub fn explain(args: ExplainArgs) -> Result<ExitCode> {
    let model = load_model(&args.model)?;
    let graph = parse_smiles(&args.smiles).with_context(|| format!("parsing SMILES `{}`", args.smiles))?;
    let est = estimator_for(args.method, &args.estimator);
    let result = if args.signed {
        signed_scores(&model, &graph, None, &est)?
    } else {
        estimate(&model, &graph, &est)?
    };
    let spec = RenderSpec {
        title: Some(format!("{} {}", args.method.display_name(), result.smiles)),
        ..RenderSpec::new(if args.signed {
            ColorScale::Diverging
        } else {
            ColorScale::Sequential
        })
    };
    let svg = render_svg(&graph, &result.scores, &spec);
    let json_path = with_suffix(&args.out, "json");
    let svg_path = with_suffix(&args.out, "svg");
    write_atomic(&json_path, result.to_json().as_bytes())?;
    write_atomic(&svg_path, svg.as_bytes())?;
    for (i, s) in result.scores.iter().enumerate() {
        println!("{i:>3} {:<2} {s:+.6}", graph.atom(i).element.symbol());
    }
    eprintln!("wrote {} and {}", json_path.display(), svg_path.display());
    Ok(ExitCode::SUCCESS)
}

fn motif_eval_set(graphs: &[MolecularGraph], motif_smiles: &str) -> Result<Vec<(MolecularGraph, std::collections::BTreeSet<usize>)>> {
    let motif = parse_smiles(motif_smiles).with_context(|| format!("motif `{motif_smiles}`"))?;
    let truths = motif_truths(graphs, &motif);
    if truths.is_empty() {
        return Err(EvalError::NoPositives.into());
    }
    Ok(truths.into_iter().map(|(i, t)| (graphs[i].clone(), t)).collect())
}

fn pooling(per_molecule_average: bool) -> Pooling {
    if per_molecule_average {
        Pooling::PerMoleculeAverage
    } else {
        Pooling::Pooled
    }
}

#[derive(Serialize)]
struct EvalFile<'a> {
    format_version: &'static str,
    motif: &'a str,
    pooling: Pooling,
    molecules: usize,
    results: &'a [SaliencyEvaluation],
}

pub fn eval_saliency(args: EvalArgs) -> Result<ExitCode> {
    let model = load_model(&args.model)?;
    let records = load_dataset(&args.dataset, model.task)?;
    let graphs: Vec<MolecularGraph> = records.into_iter().map(|r| r.graph).collect();
    let eval = motif_eval_set(&graphs, &args.motif)?;
    let methods = if args.methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        args.methods.clone()
    };
    let pooling = pooling(args.per_molecule_average);
    let results = methods
        .iter()
        .map(|&m| evaluate_saliency(&model, &eval, &estimator_for(m, &args.estimator), pooling))
        .collect::<Result<Vec<_>, _>>()?;

    println!("{:<16} {:>8}", "Method", "PRC-AUC");
    for r in &results {
        println!("{:<16} {:>8.4}", r.method.display_name(), r.prc_auc);
    }
    println!(
        "{} molecules with the motif, positive-atom rate {:.3}",
        eval.len(),
        results[0].positive_atom_rate
    );
    if let Some(out) = &args.out {
        let file = EvalFile {
            format_version: EVAL_FORMAT_VERSION,
            motif: &args.motif,
            pooling,
            molecules: eval.len(),
            results: &results,
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        write_atomic(out, text.as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Per-method estimators with comparable draw budgets: BayesSmoothGrad
/// splits `samples` into about √samples masks × √samples noise draws.
fn benchmark_estimators(args: &BenchmarkArgs) -> Vec<Estimator> {
    let methods = if args.methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        args.methods.clone()
    };
    methods
        .into_iter()
        .map(|m| {
            let est = match m {
                Method::Vanilla => Estimator::vanilla(),
                Method::Smooth => Estimator::smooth(args.sigma, args.samples, 0),
                Method::Bayes => Estimator::bayes(args.samples, 0),
                Method::BayesSmooth => {
                    let masks = args
                        .mask_samples
                        .unwrap_or_else(|| ((args.samples as f64).sqrt().round() as usize).max(1));
                    Estimator::bayes_smooth(args.sigma, (args.samples / masks).max(1), masks, 0)
                }
            };
            est.with_norm(args.norm)
        })
        .collect()
}

pub fn benchmark(args: BenchmarkArgs) -> Result<ExitCode> {
    let records = load_dataset(&args.dataset, Task::Binary)?;
    if args.holdout == 0 || args.holdout >= records.len() {
        bail!("--holdout {} must be between 1 and the dataset size {} minus one", args.holdout, records.len());
    }
    let data = pairs(&records);
    let (pool, held) = data.split_at(data.len() - args.holdout);
    let held_graphs: Vec<MolecularGraph> = held.iter().map(|(g, _)| g.clone()).collect();
    let mut eval = motif_eval_set(&held_graphs, &args.motif)?;
    eval.truncate(args.max_eval.max(1));

    let config = BenchmarkConfig {
        subset_size: args.subset_size,
        repeats: args.repeats,
        estimators: benchmark_estimators(&args),
        train: train_config(&args.model, Task::Binary, 0),
        pooling: pooling(args.per_molecule_average),
        seed: args.seed,
    };
    let report = benchmark_run(pool, &eval, &config)?;
    print!("{}", report.to_table());
    if let Some(out) = &args.out {
        write_atomic(out, report.to_json().as_bytes())?;
    }
    if let Some(csv) = &args.csv {
        write_atomic(csv, report.to_csv().as_bytes())?;
    }
    if report.failure_fraction() > MAX_FAILED_FRACTION {
        eprintln!(
            "error: {} of {} repeats failed (limit {:.0}%)",
            report.failed_repeats.len(),
            report.repeats,
            MAX_FAILED_FRACTION * 100.0
        );
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}
