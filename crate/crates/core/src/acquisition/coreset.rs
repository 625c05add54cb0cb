//! Greedy k-center selection with incrementally maintained nearest-center
//! distances: O(|U|) memory, one pass over the pool per selected point.

use ndarray::{ArrayView1, ArrayView2};

use super::QueryBatch;

fn dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Distance from every pool point to its nearest center.
#[derive(Debug, Clone, PartialEq)]
pub struct CoresetState {
    d_min: Vec<f64>,
    taken: Vec<bool>,
}

impl CoresetState {
    /// Start from the labeled set as the initial centers.
    pub fn new(pool: ArrayView2<'_, f64>, labeled: ArrayView2<'_, f64>) -> Self {
        let d_min = pool
            .rows()
            .into_iter()
            .map(|u| {
                labeled
                    .rows()
                    .into_iter()
                    .map(|l| dist(u, l))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        CoresetState {
            d_min,
            taken: vec![false; pool.nrows()],
        }
    }

    pub fn d_min(&self) -> &[f64] {
        &self.d_min
    }

    /// The untaken pool point farthest from every center; ties to the smaller index.
    pub fn farthest(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &d) in self.d_min.iter().enumerate() {
            if !self.taken[i] && best.is_none_or(|b| d > self.d_min[b]) {
                best = Some(i);
            }
        }
        best
    }

    /// Make pool point `q` a center.
    pub fn add_center(&mut self, pool: ArrayView2<'_, f64>, q: usize) {
        self.taken[q] = true;
        let center = pool.row(q);
        for (d, u) in self.d_min.iter_mut().zip(pool.rows()) {
            *d = d.min(dist(u, center));
        }
    }
}

pub fn select_coreset(pool: ArrayView2<'_, f64>, labeled: ArrayView2<'_, f64>, b: usize) -> QueryBatch {
    let mut state = CoresetState::new(pool, labeled);
    let mut picked = Vec::with_capacity(b.min(pool.nrows()));
    while picked.len() < b {
        let Some(q) = state.farthest() else { break };
        state.add_center(pool, q);
        picked.push(q);
    }
    QueryBatch::new(picked)
}
