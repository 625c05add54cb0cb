//! Brute-force reference implementations and fixtures shared by the
//! integration suites. Nothing here calls the selection code it checks.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::thread;

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use tabal::acquisition::{kmeans, AcquisitionConfig};
use tabal::predictor::{Predictor, ProbabilityMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.random_range(-3.0..3.0))
}

pub fn random_proba(rng: &mut ChaCha8Rng, n: usize, k: usize) -> ProbabilityMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect();
    ProbabilityMatrix::from_rows(&rows, k).unwrap()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn sq_euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
}

fn row(x: ArrayView2<'_, f64>, i: usize) -> Vec<f64> {
    x.row(i).to_vec()
}

/// Sort every row, subtract the two largest, fully sort by (margin, index).
pub fn brute_margin(p: &ProbabilityMatrix, b: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = (0..p.n_rows())
        .map(|i| {
            let mut r = p.row(i).to_vec();
            r.sort_by(|a, b| b.partial_cmp(a).unwrap());
            (r[0] - r[1], i)
        })
        .collect();
    scored.sort_by(|a, b| a.partial_cmp(b).unwrap());
    scored.into_iter().take(b).map(|(_, i)| i).collect()
}

/// Nearest-center distances recomputed from scratch over every center.
pub fn naive_d_min(pool: ArrayView2<'_, f64>, centers: &[Vec<f64>]) -> Vec<f64> {
    (0..pool.nrows())
        .map(|i| {
            centers
                .iter()
                .map(|c| euclid(&row(pool, i), c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn brute_coreset(pool: ArrayView2<'_, f64>, labeled: ArrayView2<'_, f64>, b: usize) -> Vec<usize> {
    let mut centers: Vec<Vec<f64>> = (0..labeled.nrows()).map(|i| row(labeled, i)).collect();
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < b.min(pool.nrows()) {
        let d = naive_d_min(pool, &centers);
        let mut best: Option<usize> = None;
        for i in 0..pool.nrows() {
            if picked.contains(&i) {
                continue;
            }
            if best.is_none() || d[i] > d[best.unwrap()] {
                best = Some(i);
            }
        }
        let q = best.unwrap();
        picked.push(q);
        centers.push(row(pool, q));
    }
    picked
}

/// Entropy screen, then k-means (the library's, same seed) over the
/// candidates in screen order, then the nearest unclaimed candidate to each
/// centroid.
pub fn brute_hybrid(
    p: &ProbabilityMatrix,
    pool: ArrayView2<'_, f64>,
    b: usize,
    cfg: &AcquisitionConfig,
    seed: u64,
) -> Vec<usize> {
    let n = p.n_rows();
    let mut scored: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            let h: f64 = p.row(i).iter().map(|&v| -v * (v + cfg.entropy_eps).ln()).sum();
            (-h, i)
        })
        .collect();
    scored.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n_cand = n.min((2 * b).max(n / 2));
    let cand: Vec<usize> = scored.iter().take(n_cand).map(|&(_, i)| i).collect();
    let x = Array2::from_shape_fn((cand.len(), pool.ncols()), |(r, c)| pool[[cand[r], c]]);
    let km = kmeans(x.view(), b.min(cand.len()), &cfg.kmeans, seed);
    let mut claimed: Vec<usize> = Vec::new();
    for centroid in km.centroids.rows() {
        let c = centroid.to_vec();
        let best = cand
            .iter()
            .copied()
            .filter(|i| !claimed.contains(i))
            .min_by(|&a, &b| {
                sq_euclid(&row(pool, a), &c)
                    .partial_cmp(&sq_euclid(&row(pool, b), &c))
                    .unwrap()
                    .then(a.cmp(&b))
            })
            .unwrap();
        claimed.push(best);
    }
    claimed
}

/// Step-up rejection set: reject every hypothesis whose p-value is at most
/// the largest sorted p_(k) with p_(k) <= k * alpha / m.
pub fn step_up_rejections(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len();
    let mut sorted = p.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut threshold = None;
    for k in (1..=m).rev() {
        if sorted[k - 1] <= k as f64 * alpha / m as f64 {
            threshold = Some(sorted[k - 1]);
            break;
        }
    }
    p.iter().map(|&v| threshold.is_some_and(|t| v <= t)).collect()
}

/// Deterministic distribution over K classes from the first feature.
pub fn fixed_distribution(x: ArrayView2<'_, f64>, k: usize) -> Vec<Vec<f64>> {
    x.rows()
        .into_iter()
        .map(|r| {
            let raw: Vec<f64> = (0..k).map(|c| 1.0 / (1.0 + (r[0] - c as f64).abs())).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect()
}

/// In-process predictor returning [`fixed_distribution`] for the queries.
pub struct FixedPredictor;

impl Predictor for FixedPredictor {
    fn name(&self) -> String {
        "fixed".into()
    }

    fn predict_proba(
        &mut self,
        _context_x: ArrayView2<'_, f64>,
        _context_y: &[usize],
        queries: ArrayView2<'_, f64>,
        n_classes: usize,
    ) -> tabal::Result<ProbabilityMatrix> {
        ProbabilityMatrix::from_rows(&fixed_distribution(queries, n_classes), n_classes)
    }
}

/// A TCP server speaking the predictor protocol that answers every predict
/// request with [`fixed_distribution`]. Serves `connections` clients in turn.
/// Returns `host:port`.
pub fn spawn_fixed_server(connections: usize) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    thread::spawn(move || {
        for stream in listener.incoming().take(connections) {
            let stream = stream.unwrap();
            let mut writer = stream.try_clone().unwrap();
            for line in BufReader::new(stream).lines() {
                let Ok(line) = line else { break };
                let msg: Value = serde_json::from_str(&line).unwrap();
                let reply = match msg["type"].as_str().unwrap() {
                    "hello" => json!({"type": "hello_ack", "protocol": 1, "name": "fixed-mock"}),
                    "predict" => {
                        let k = msg["classes"].as_u64().unwrap() as usize;
                        let rows: Vec<Vec<f64>> = serde_json::from_value(msg["query"]["x"].clone()).unwrap();
                        let d = rows.first().map_or(0, |r| r.len());
                        let flat: Vec<f64> = rows.concat();
                        let x = Array2::from_shape_vec((rows.len(), d), flat).unwrap();
                        json!({"type": "proba", "request_id": msg["request_id"], "p": fixed_distribution(x.view(), k)})
                    }
                    other => panic!("unexpected message {other}"),
                };
                let mut out = serde_json::to_string(&reply).unwrap();
                out.push('\n');
                if writer.write_all(out.as_bytes()).is_err() {
                    break;
                }
            }
        }
    });
    addr
}
