use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    /// Score of the last item selected at this cut.
    pub threshold: f64,
}

/// Precision and recall after selecting the top 1, 2, ..., N items.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub positives: usize,
    pub total: usize,
}

/// Ranks items by descending score (ties in index order) and records a
/// point at every cut.
pub fn pr_curve(scores: &[f64], positive: &[bool]) -> Result<PrCurve, EvalError> {
    if scores.len() != positive.len() {
        return Err(EvalError::LengthMismatch {
            what: "labels",
            expected: scores.len(),
            found: positive.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    let total_pos = positive.iter().filter(|&&p| p).count();
    if total_pos == 0 {
        return Err(EvalError::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps index order within ties
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let points = order
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            hits += usize::from(positive[i]);
            PrPoint {
                recall: hits as f64 / total_pos as f64,
                precision: hits as f64 / (k + 1) as f64,
                threshold: scores[i],
            }
        })
        .collect();
    Ok(PrCurve {
        points,
        positives: total_pos,
        total: scores.len(),
    })
}

/// Rescales to `[0, 1]`; a constant vector maps to all zeros.
pub fn min_max_normalize(scores: &[f64]) -> Vec<f64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; scores.len()];
    }
    scores.iter().map(|s| (s - lo) / (hi - lo)).collect()
}

fn check_molecules(scores: &[Vec<f64>], truths: &[BTreeSet<usize>]) -> Result<(), EvalError> {
    if scores.len() != truths.len() {
        return Err(EvalError::LengthMismatch {
            what: "ground-truth sets",
            expected: scores.len(),
            found: truths.len(),
        });
    }
    if scores.is_empty() {
        return Err(EvalError::NoPositives);
    }
    for (molecule, (s, t)) in scores.iter().zip(truths).enumerate() {
        if t.is_empty() {
            return Err(EvalError::EmptyTruth { molecule });
        }
        if let Some(&atom) = t.iter().find(|&&a| a >= s.len()) {
            return Err(EvalError::TruthIndex {
                molecule,
                atom,
                atoms: s.len(),
            });
        }
    }
    Ok(())
}

/// Pooled curve over several molecules.
///
/// Scores are min-max normalized within each molecule, then every atom of
/// every molecule is ranked together; ties go to the lower molecule index,
/// then the lower atom index. Each molecule needs a non-empty truth set.
pub fn saliency_pr_curve(scores: &[Vec<f64>], truths: &[BTreeSet<usize>]) -> Result<PrCurve, EvalError> {
    check_molecules(scores, truths)?;
    let mut pooled = Vec::new();
    let mut labels = Vec::new();
    for (s, t) in scores.iter().zip(truths) {
        pooled.extend(min_max_normalize(s));
        labels.extend((0..s.len()).map(|i| t.contains(&i)));
    }
    pr_curve(&pooled, &labels)
}

/// Mean of the per-molecule PRC-AUC values, the alternative to pooling.
pub fn per_molecule_average_auc(scores: &[Vec<f64>], truths: &[BTreeSet<usize>]) -> Result<f64, EvalError> {
    check_molecules(scores, truths)?;
    let mut total = 0.0;
    for (s, t) in scores.iter().zip(truths) {
        let labels: Vec<bool> = (0..s.len()).map(|i| t.contains(&i)).collect();
        total += prc_auc(&pr_curve(s, &labels)?)?;
    }
    Ok(total / scores.len() as f64)
}

/// Step-wise area: `Σ (r_k - r_{k-1}) p_k` starting from recall 0.
pub fn prc_auc(curve: &PrCurve) -> Result<f64, EvalError> {
    if curve.points.is_empty() {
        return Err(EvalError::EmptyCurve);
    }
    let mut area = 0.0;
    let mut last_recall = 0.0;
    for p in &curve.points {
        area += (p.recall - last_recall) * p.precision;
        last_recall = p.recall;
    }
    Ok(area)
}
