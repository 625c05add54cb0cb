//! Test-set metrics and the normalized area under the learning curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::ProbabilityMatrix;

/// Chance-corrected agreement between two label sequences.
///
/// When chance agreement is 1 (both sequences constant on the same label) the
/// ratio is undefined; that case returns 1 for perfect agreement and 0 otherwise.
pub fn cohen_kappa(y_true: &[usize], y_pred: &[usize]) -> f64 {
    assert_eq!(y_true.len(), y_pred.len(), "label sequences differ in length");
    assert!(!y_true.is_empty(), "kappa of an empty sequence");
    let k = y_true.iter().chain(y_pred).max().unwrap() + 1;
    let n = y_true.len() as f64;
    let mut row = vec![0.0; k];
    let mut col = vec![0.0; k];
    let mut agree = 0.0;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        row[t] += 1.0;
        col[p] += 1.0;
        if t == p {
            agree += 1.0;
        }
    }
    let p_o = agree / n;
    let p_e: f64 = row.iter().zip(&col).map(|(r, c)| r * c).sum::<f64>() / (n * n);
    if (1.0 - p_e).abs() < 1e-15 {
        return if p_o == 1.0 { 1.0 } else { 0.0 };
    }
    (p_o - p_e) / (1.0 - p_e)
}

/// Area under the ROC curve of `scores` for the positive set, via the
/// Mann-Whitney rank statistic (tied pairs count one half). `None` if either
/// side is empty.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // average of 1-based ranks i+1 ..= j+1
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += avg * order[i..=j].iter().filter(|&&o| positive[o]).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Some((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

/// One-vs-rest ROC AUC averaged over the classes present in `y_true`.
/// `None` when fewer than two classes are present.
pub fn roc_auc_ovr_macro(y_true: &[usize], p: &ProbabilityMatrix) -> Option<f64> {
    assert_eq!(y_true.len(), p.n_rows(), "labels and probability rows differ");
    let mut total = 0.0;
    let mut used = 0;
    for c in 0..p.n_classes() {
        let positive: Vec<bool> = y_true.iter().map(|&y| y == c).collect();
        let scores = p.values().column(c).to_vec();
        if let Some(auc) = binary_auc(&scores, &positive) {
            total += auc;
            used += 1;
        }
    }
    (used > 0).then(|| total / used as f64)
}

/// `(labeled count, metric value)` pairs with strictly increasing counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve(Vec<(usize, f64)>);

impl LearningCurve {
    pub fn new(points: Vec<(usize, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument(
                "learning-curve counts must be strictly increasing".into(),
            ));
        }
        if points.iter().any(|p| !p.1.is_finite()) {
            return Err(Error::InvalidArgument(
                "learning-curve values must be finite".into(),
            ));
        }
        Ok(LearningCurve(points))
    }

    pub fn points(&self) -> &[(usize, f64)] {
        &self.0
    }
}

/// Trapezoidal area under the curve divided by `n_max - n_0`, i.e. the mean
/// metric over the acquisition trajectory. A curve that stops short of
/// `n_max` keeps the same denominator.
pub fn aulc_norm(curve: &LearningCurve, n_max: usize) -> Result<f64> {
    let pts = curve.points();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(
            "AULC needs at least two curve points".into(),
        ));
    }
    let n0 = pts[0].0;
    if n0 >= n_max {
        return Err(Error::InvalidArgument(format!(
            "initial count {n0} is not below the budget {n_max}"
        )));
    }
    // Integrate relative to y_0 so a constant curve reproduces y_0 exactly.
    let y0 = pts[0].1;
    let span = (n_max - n0) as f64;
    let covered = (pts[pts.len() - 1].0 - n0) as f64;
    let excess: f64 = pts
        .windows(2)
        .map(|w| ((w[0].1 - y0) + (w[1].1 - y0)) / 2.0 * (w[1].0 - w[0].0) as f64)
        .sum();
    let base = if covered == span { y0 } else { y0 * covered / span };
    Ok(base + excess / span)
}
