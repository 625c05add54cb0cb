//! Uncertainty filtering followed by k-means diversification.

use ndarray::{Array2, ArrayView1, ArrayView2};

use super::kmeans::{kmeans, KMeansConfig};
use super::scores::{entropy_scores, top_k_desc};
use super::{AcquisitionConfig, QueryBatch};
use crate::error::Result;
use crate::predictor::{fit_linear, Predictor, ProbabilityMatrix};

/// `min(|U|, max(2B, floor(|U| / 2)))`.
pub fn candidate_count_hybrid(pool_size: usize, b: usize) -> usize {
    pool_size.min((2 * b).max(pool_size / 2))
}

/// `min(|U|, max(n_min, min(n_max, floor(alpha * |U|))))`.
pub fn compute_n_proxy(pool_size: usize, alpha: f64, n_min: usize, n_max: usize) -> usize {
    let scaled = (alpha * pool_size as f64).floor() as usize;
    pool_size.min(n_min.max(n_max.min(scaled)))
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// For each centroid in order, the closest point not already claimed by an
/// earlier centroid. Distance ties go to the smaller id. Returns ids.
pub fn nearest_unique(points: ArrayView2<'_, f64>, ids: &[usize], centroids: &Array2<f64>) -> Vec<usize> {
    let mut claimed = vec![false; points.nrows()];
    let mut picked = Vec::with_capacity(centroids.nrows());
    for centroid in centroids.rows() {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.rows().into_iter().enumerate() {
            if claimed[i] {
                continue;
            }
            let d = sq_dist(p, centroid);
            let better = match best {
                None => true,
                Some((j, bd)) => d < bd || (d == bd && ids[i] < ids[j]),
            };
            if better {
                best = Some((i, d));
            }
        }
        if let Some((i, _)) = best {
            claimed[i] = true;
            picked.push(ids[i]);
        }
    }
    picked
}

fn gather(x: ArrayView2<'_, f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), x.ncols()));
    for (r, &i) in rows.iter().enumerate() {
        out.row_mut(r).assign(&x.row(i));
    }
    out
}

/// Cluster the given pool rows into `min(b, |rows|)` groups and take the
/// point nearest each centroid.
pub fn diversify(pool: ArrayView2<'_, f64>, rows: &[usize], b: usize, cfg: &KMeansConfig, seed: u64) -> QueryBatch {
    if rows.is_empty() || b == 0 {
        return QueryBatch::new(Vec::new());
    }
    let x = gather(pool, rows);
    let k = b.min(rows.len());
    let km = kmeans(x.view(), k, cfg, seed);
    QueryBatch::new(nearest_unique(x.view(), rows, &km.centroids))
}

/// Highest-entropy candidates, then one point per k-means centroid.
pub fn select_hybrid(
    p: &ProbabilityMatrix,
    pool: ArrayView2<'_, f64>,
    b: usize,
    cfg: &AcquisitionConfig,
    seed: u64,
) -> QueryBatch {
    let entropy = entropy_scores(p, cfg.entropy_eps);
    let ids: Vec<usize> = (0..entropy.len()).collect();
    let n_cand = candidate_count_hybrid(entropy.len(), b);
    let candidates = top_k_desc(&entropy, &ids, n_cand);
    diversify(pool, &candidates, b, &cfg.kmeans, seed)
}

/// Screen the pool with a logistic proxy fitted on the context, score only the
/// shortlist with the main predictor, then diversify over the most uncertain
/// `min(3B, |shortlist|)` shortlisted points.
#[allow(clippy::too_many_arguments)]
pub fn select_proxy_hybrid<P: Predictor + ?Sized>(
    predictor: &mut P,
    context_x: ArrayView2<'_, f64>,
    context_y: &[usize],
    n_classes: usize,
    pool: ArrayView2<'_, f64>,
    b: usize,
    cfg: &AcquisitionConfig,
    seed: u64,
) -> Result<QueryBatch> {
    let n_pool = pool.nrows();
    if n_pool == 0 || b == 0 {
        return Ok(QueryBatch::new(Vec::new()));
    }
    let proxy = fit_linear(context_x, context_y, n_classes, &cfg.proxy)?;
    let proxy_entropy = entropy_scores(&proxy.predict_proba(pool)?, cfg.entropy_eps);
    let ids: Vec<usize> = (0..n_pool).collect();
    let n_proxy = compute_n_proxy(n_pool, cfg.filter_ratio, cfg.proxy_min, cfg.proxy_max);
    let shortlist = top_k_desc(&proxy_entropy, &ids, n_proxy);

    let shortlist_x = gather(pool, &shortlist);
    let main = predictor.predict_proba(context_x, context_y, shortlist_x.view(), n_classes)?;
    let main_entropy = entropy_scores(&main, cfg.entropy_eps);
    let n_div = (3 * b).min(shortlist.len());
    let finalists: Vec<usize> = top_k_desc(&main_entropy, &shortlist, n_div)
        .into_iter()
        .map(|local| shortlist[local])
        .collect();
    Ok(diversify(pool, &finalists, b, &cfg.kmeans, seed))
}
