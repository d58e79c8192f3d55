//! `graphsal` command-line tool.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use graphsal::gnn::ModelKind;
use graphsal::molgraph::Task;
use graphsal::saliency::{Method, Norm};

#[derive(Parser, Debug)]
#[command(name = "graphsal", version, about = "Saliency maps for graph neural networks on molecules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic `smiles,label` dataset.
    Generate(GenerateArgs),
    /// Train a model on a dataset CSV.
    Train(TrainArgs),
    /// Score the atoms of one molecule and draw them.
    Explain(ExplainArgs),
    /// Measure how well saliency maps recover a motif on a dataset.
    EvalSaliency(EvalArgs),
    /// Repeated train-and-evaluate runs comparing all estimators.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DatasetKind {
    /// Binary labels: does the molecule contain the motif?
    Motif,
    /// Regression targets from additive group contributions.
    Solubility,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "motif")]
    kind: DatasetKind,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Planted motif (motif datasets only).
    #[arg(long, default_value = "c1ccncc1")]
    motif: String,
    #[arg(long, default_value_t = 0.3)]
    positive_rate: f64,
    #[arg(long)]
    min_atoms: Option<usize>,
    #[arg(long)]
    max_atoms: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[arg(long, default_value = "ggnn")]
    model: ModelKind,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = 32)]
    readout: usize,
    #[arg(long, default_value_t = 3)]
    rounds: usize,
    #[arg(long, default_value_t = 0.25)]
    dropout: f64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "binary")]
    task: Task,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Metrics JSON path (default: next to the model, `.metrics.json`).
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Hold out this fraction of rows (taken from the end) for validation.
    #[arg(long, default_value_t = 0.0)]
    valid_fraction: f64,
}

#[derive(Args, Debug, Clone)]
struct EstimatorArgs {
    /// Noise draws (smooth, bayes-smooth) or mask draws (bayes).
    #[arg(long)]
    samples: Option<usize>,
    /// Mask draws for bayes-smooth.
    #[arg(long)]
    mask_samples: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value = "l2")]
    norm: Norm,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    smiles: String,
    #[arg(long)]
    method: Method,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Signed contributions against an all-zero baseline.
    #[arg(long)]
    signed: bool,
    /// Output prefix: writes `<out>.json` and `<out>.svg`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "c1ccncc1")]
    motif: String,
    /// Methods to evaluate; all four when omitted.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Average per-molecule curves instead of pooling normalized atoms.
    #[arg(long)]
    per_molecule_average: bool,
    /// Report JSON path; the summary always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "c1ccncc1")]
    motif: String,
    #[arg(long, default_value_t = 1000)]
    subset_size: usize,
    #[arg(long, default_value_t = 30)]
    repeats: usize,
    /// Rows at the end of the dataset kept out of every training subset.
    #[arg(long, default_value_t = 400)]
    holdout: usize,
    /// Cap on motif-containing held-out molecules that are scored.
    #[arg(long, default_value_t = 50)]
    max_eval: usize,
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    #[command(flatten)]
    model: ModelArgs,
    /// Draws per sampled estimator (bayes-smooth splits them as
    /// noise × masks unless `--mask-samples` is given).
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long)]
    mask_samples: Option<usize>,
    #[arg(long, default_value_t = 0.15)]
    sigma: f64,
    #[arg(long, default_value = "l2")]
    norm: Norm,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    per_molecule_average: bool,
    /// Report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-repeat PRC-AUC matrix.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Train(a) => commands::train(a),
        Command::Explain(a) => commands::explain(a),
        Command::EvalSaliency(a) => commands::eval_saliency(a),
        Command::Benchmark(a) => commands::benchmark(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("GRAPHSAL_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("GRAPHSAL_THREADS must be a positive integer, got `{value}`"))?;
    if n == 0 {
        anyhow::bail!("GRAPHSAL_THREADS must be a positive integer, got `{value}`");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

