//! Ranking metrics and the saliency benchmark.
//!
//! A saliency map is judged as a ranking of atoms: the atoms of the planted
//! motif are the positives, and the precision-recall curve records how
//! quickly they appear when atoms are taken in decreasing score order.
//!
//! ```
//! use std::collections::BTreeSet;
//! use graphsal::eval::{prc_auc, roc_auc, saliency_pr_curve};
//!
//! let curve = saliency_pr_curve(&[vec![0.9, 0.8, 0.1]], &[BTreeSet::from([0, 2])])?;
//! assert!((prc_auc(&curve)? - 5.0 / 6.0).abs() < 1e-15);
//! assert_eq!(roc_auc(&[0.2, 0.9, 0.4], &[false, true, true])?, 1.0);
//! # Ok::<(), graphsal::eval::EvalError>(())
//! ```

mod benchmark;
mod metrics;
mod pr;

pub use benchmark::{
    benchmark_run, benchmark_with_seeds, evaluate_saliency, motif_truths, BenchmarkConfig, BenchmarkReport, MethodRow, Pooling,
    SaliencyEvaluation, BENCHMARK_FORMAT_VERSION,
};
pub use metrics::{mean_absolute_error, pearson, roc_auc};
pub use pr::{min_max_normalize, per_molecule_average_auc, pr_curve, prc_auc, saliency_pr_curve, PrCurve, PrPoint};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("expected {expected} {what}, got {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("scores must be finite")]
    NonFinite,
    #[error("both classes must be present")]
    SingleClass,
    #[error("no positive molecules: the motif matches none of the inputs")]
    NoPositives,
    #[error("molecule {molecule} has an empty ground-truth set; keep only molecules containing the motif")]
    EmptyTruth { molecule: usize },
    #[error("molecule {molecule}: ground-truth atom {atom} out of range for {atoms} atoms")]
    TruthIndex { molecule: usize, atom: usize, atoms: usize },
    #[error("precision-recall curve has no points")]
    EmptyCurve,
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error("saliency failed: {0}")]
    Saliency(String),
}
