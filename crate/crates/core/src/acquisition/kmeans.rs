//! Lloyd's k-means with distance-weighted seeding.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iter: 100,
            tol: 1e-4,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Array2<f64>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: ArrayView1<'_, f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_centroids(x: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = x.nrows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|r| sq_dist(r, x.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave the target just past the final sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            // every point coincides with a chosen centroid
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, r) in x.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, x.row(next)));
        }
    }
    let mut centroids = Array2::zeros((k, x.ncols()));
    for (c, &i) in chosen.iter().enumerate() {
        centroids.row_mut(c).assign(&x.row(i));
    }
    centroids
}

fn lloyd(x: ArrayView2<'_, f64>, mut centroids: Array2<f64>, cfg: &KMeansConfig) -> KMeansResult {
    let n = x.nrows();
    let k = centroids.nrows();
    let mut assignments = vec![0; n];
    let mut dists = vec![0.0; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        for (i, row) in x.rows().into_iter().enumerate() {
            let (c, d) = nearest(row, &centroids);
            assignments[i] = c;
            dists[i] = d;
        }
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        // repair empty clusters with the point farthest from its centroid
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far = None;
            for i in 0..n {
                if counts[assignments[i]] > 1 && far.is_none_or(|f: usize| dists[i] > dists[f]) {
                    far = Some(i);
                }
            }
            let Some(i) = far else { break };
            counts[assignments[i]] -= 1;
            counts[c] = 1;
            assignments[i] = c;
            dists[i] = 0.0;
            centroids.row_mut(c).assign(&x.row(i));
        }
        trace.push(dists.iter().sum());
        if iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;

        let mut next = Array2::<f64>::zeros(centroids.raw_dim());
        for (i, row) in x.rows().into_iter().enumerate() {
            let mut target = next.row_mut(assignments[i]);
            target += &row;
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                next.row_mut(c).assign(&centroids.row(c));
            } else {
                next.row_mut(c).mapv_inplace(|v| v / counts[c] as f64);
            }
            shift = shift.max(sq_dist(next.row(c), centroids.row(c)).sqrt());
        }
        centroids = next;
        if shift < cfg.tol {
            for (i, row) in x.rows().into_iter().enumerate() {
                let (c, d) = nearest(row, &centroids);
                assignments[i] = c;
                dists[i] = d;
            }
            trace.push(dists.iter().sum());
            break;
        }
    }
    KMeansResult {
        inertia: *trace.last().unwrap(),
        centroids,
        assignments,
        inertia_trace: trace,
        iterations,
    }
}

/// Cluster the rows of `x` into `k` groups. Deterministic in `seed`.
///
/// # Panics
/// If `k` is zero or exceeds the number of rows.
pub fn kmeans(x: ArrayView2<'_, f64>, k: usize, cfg: &KMeansConfig, seed: u64) -> KMeansResult {
    assert!(
        k >= 1 && k <= x.nrows(),
        "k = {k} must lie in 1..={}",
        x.nrows()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..cfg.restarts.max(1) {
        let result = lloyd(x, seed_centroids(x, k, &mut rng), cfg);
        if best.as_ref().is_none_or(|b| result.inertia < b.inertia) {
            best = Some(result);
        }
    }
    best.unwrap()
}
