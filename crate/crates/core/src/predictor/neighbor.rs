//! Distance-weighted nearest-neighbor vote with additive smoothing.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{check_inputs, Predictor, ProbabilityMatrix};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeighborConfig {
    /// Upper bound on the number of neighbors that vote.
    pub k_max: usize,
    /// Added to every distance before inversion.
    pub delta: f64,
    /// Additive smoothing per class.
    pub lambda: f64,
}

impl Default for NeighborConfig {
    fn default() -> Self {
        NeighborConfig {
            k_max: 15,
            delta: 1e-9,
            lambda: 1e-3,
        }
    }
}

/// For each query, the `min(|context|, k_max)` nearest context points vote
/// with weight `1 / (distance + delta)`; class scores are smoothed by `lambda`
/// and normalized. Neighbor ties are broken by (distance, label), which makes
/// the result independent of context order.
pub fn neighbor_predict(
    context_x: ArrayView2<'_, f64>,
    context_y: &[usize],
    queries: ArrayView2<'_, f64>,
    n_classes: usize,
    cfg: &NeighborConfig,
) -> Result<ProbabilityMatrix> {
    check_inputs(context_x, context_y, queries, n_classes)?;
    let k = context_x.nrows().min(cfg.k_max.max(1));
    let mut out = Array2::zeros((queries.nrows(), n_classes));
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(context_x.nrows());
    for (qi, q) in queries.rows().into_iter().enumerate() {
        dists.clear();
        for (c, &y) in context_x.rows().into_iter().zip(context_y) {
            let d2: f64 = q.iter().zip(c.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            dists.push((d2.sqrt(), y));
        }
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dists.len() {
            dists.select_nth_unstable_by(k - 1, by_distance);
            dists.truncate(k);
        }
        dists.sort_unstable_by(by_distance);

        let mut scores = vec![0.0; n_classes];
        for &(d, y) in dists.iter() {
            scores[y] += 1.0 / (d + cfg.delta);
        }
        let total: f64 = scores.iter().sum::<f64>() + n_classes as f64 * cfg.lambda;
        for (c, s) in scores.iter().enumerate() {
            out[[qi, c]] = (s + cfg.lambda) / total;
        }
    }
    ProbabilityMatrix::new(out)
}

#[derive(Debug, Clone, Default)]
pub struct NeighborPredictor {
    cfg: NeighborConfig,
}

impl NeighborPredictor {
    pub fn new(cfg: NeighborConfig) -> Self {
        NeighborPredictor { cfg }
    }
}

impl Predictor for NeighborPredictor {
    fn name(&self) -> String {
        "neighbor".into()
    }

    fn predict_proba(
        &mut self,
        context_x: ArrayView2<'_, f64>,
        context_y: &[usize],
        queries: ArrayView2<'_, f64>,
        n_classes: usize,
    ) -> Result<ProbabilityMatrix> {
        neighbor_predict(context_x, context_y, queries, n_classes, &self.cfg)
    }
}
