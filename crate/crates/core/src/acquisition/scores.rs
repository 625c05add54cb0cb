use crate::predictor::ProbabilityMatrix;

use super::QueryBatch;

/// Gap between the two largest probabilities of each row.
pub fn margin_scores(p: &ProbabilityMatrix) -> Vec<f64> {
    p.values()
        .rows()
        .into_iter()
        .map(|row| {
            let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &v in row {
                if v > first {
                    second = first;
                    first = v;
                } else if v > second {
                    second = v;
                }
            }
            first - second
        })
        .collect()
}

/// `-sum_k p_k ln(p_k + eps)` per row.
pub fn entropy_scores(p: &ProbabilityMatrix, eps: f64) -> Vec<f64> {
    p.values()
        .rows()
        .into_iter()
        .map(|row| -row.iter().map(|&v| v * (v + eps).ln()).sum::<f64>())
        .collect()
}

/// Local positions of the `k` largest scores, best first. Equal scores are
/// ordered by the smaller id, where `ids[i]` identifies position `i`.
pub fn top_k_desc(scores: &[f64], ids: &[usize], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(ids[a].cmp(&ids[b])));
    order.truncate(k);
    order
}

/// Positions of the `k` smallest scores, best first; ties to the smaller position.
pub fn bottom_k_asc(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// The `min(b, |U|)` pool points with the smallest margins.
pub fn select_margin(p: &ProbabilityMatrix, b: usize) -> QueryBatch {
    let scores = margin_scores(p);
    QueryBatch::new(bottom_k_asc(&scores, b.min(scores.len())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn pm(m: ndarray::Array2<f64>) -> ProbabilityMatrix {
        ProbabilityMatrix::new(m).unwrap()
    }

    #[test]
    fn margin_examples() {
        let p = pm(array![[0.7, 0.2, 0.1], [0.5, 0.5, 0.0], [0.0, 1.0, 0.0]]);
        let m = margin_scores(&p);
        assert!((m[0] - 0.5).abs() < 1e-12);
        assert_eq!(m[1], 0.0);
        assert_eq!(m[2], 1.0);
    }

    #[test]
    fn entropy_examples() {
        let h = entropy_scores(&pm(array![[0.5, 0.5], [1.0, 0.0]]), 1e-12);
        assert!((h[0] - std::f64::consts::LN_2).abs() < 1e-6);
        assert!(h[1].abs() < 1e-9);
        let h = entropy_scores(&pm(array![[0.25, 0.25, 0.25, 0.25]]), 1e-12);
        assert!((h[0] - 4f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn margin_selection_order_and_ties() {
        let p = pm(array![[0.95, 0.05], [0.55, 0.45], [0.75, 0.25]]);
        assert_eq!(select_margin(&p, 2).indices(), &[1, 2]);
        assert_eq!(select_margin(&p, 10).indices(), &[1, 2, 0]);
        let p = pm(array![[0.6, 0.4], [0.4, 0.6]]);
        assert_eq!(select_margin(&p, 1).indices(), &[0]);
    }

    #[test]
    fn binary_margin_and_entropy_agree_on_grid() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let rows: Vec<Vec<f64>> = grid.iter().map(|&q| vec![1.0 - q, q]).collect();
        let p = ProbabilityMatrix::from_rows(&rows, 2).unwrap();
        let m = margin_scores(&p);
        let h = entropy_scores(&p, 1e-12);
        for (i, &q) in grid.iter().enumerate() {
            assert!((m[i] - (q - (1.0 - q)).abs()).abs() < 1e-12);
        }
        let max_at = top_k_desc(&h, &(0..h.len()).collect::<Vec<_>>(), 1)[0];
        assert_eq!(max_at, 50);
        assert_eq!(m[max_at], 0.0);
        // entropy is a strictly decreasing function of the binary margin
        let by_margin = bottom_k_asc(&m, m.len());
        for w in by_margin.windows(2) {
            if m[w[0]] < m[w[1]] - 1e-12 {
                assert!(h[w[0]] > h[w[1]]);
            }
        }
    }
}
