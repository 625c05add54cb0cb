mod common;

use ndarray::Array2;
use proptest::prelude::*;

use tabal::acquisition::{
    kmeans, select_batch, select_hybrid, AcquisitionConfig, CoresetState, KMeansConfig, SelectionInput,
    Strategy as AcqStrategy,
};
use tabal::data::{
    infer_column_kinds, stratified_split, stratified_test_counts, subsample, Cell, ColumnKind, ColumnMeta, Dataset,
    KindSource,
};
use tabal::metrics::{binary_auc, cohen_kappa};
use tabal::predictor::{fit_linear, neighbor_predict, LinearConfig, NeighborConfig, NeighborPredictor, ProbabilityMatrix};
use tabal::preprocess::{fit_preprocessor, ColumnTransform};
use tabal::stats::{bh_adjust, wilcoxon_signed_rank, wilcoxon_signed_rank_with, WilcoxonMethod};

use common::{naive_d_min, random_matrix, random_proba, rng, step_up_rejections};

fn labeled_dataset(labels: Vec<usize>, k: usize) -> Dataset {
    let features: Vec<Vec<f64>> = labels.iter().enumerate().map(|(i, &y)| vec![i as f64, y as f64 * 0.5]).collect();
    let names = (0..k).map(|c| format!("c{c}")).collect();
    Dataset::from_numeric("p", features, labels, names).unwrap()
}

fn labels_strategy() -> impl Strategy<Value = (Vec<usize>, usize)> {
    (2usize..5).prop_flat_map(|k| {
        (prop::collection::vec(0..k, 0..60), Just(k)).prop_map(|(mut extra, k)| {
            // at least two rows per class
            for c in 0..k {
                extra.push(c);
                extra.push(c);
            }
            (extra, k)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_stratified_partition((labels, k) in labels_strategy(), frac in 0.05f64..0.95, seed in any::<u64>()) {
        let ds = labeled_dataset(labels.clone(), k);
        let split = stratified_split(&ds, frac, seed).unwrap();
        let mut all: Vec<usize> = split.pool_indices.iter().chain(&split.test_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for c in 0..k {
            let n_c = labels.iter().filter(|&&y| y == c).count();
            let t_c = split.test_indices.iter().filter(|&&i| labels[i] == c).count();
            prop_assert!(t_c >= 1 && t_c < n_c);
        }
        // before clamping every class is within one row of its exact share
        let counts = ds.class_counts();
        let unclamped = stratified_test_counts(&counts, frac);
        for (c, (&t, &n_c)) in unclamped.iter().zip(&counts).enumerate() {
            let exact = frac * n_c as f64;
            prop_assert!((t as f64 - exact).abs() < 1.0 || t == 1 || t == n_c - 1, "class {c}: {t} vs {exact}");
        }
    }

    #[test]
    fn subsample_keeps_rows_bit_for_bit(n in 4usize..80, cap in 2usize..100, seed in any::<u64>()) {
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let features: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64).sqrt() * 1.1e-3, i as f64]).collect();
        let ds = Dataset::from_numeric("s", features, labels, vec!["a".into(), "b".into()]).unwrap();
        let sub = subsample(&ds, cap, seed).unwrap();
        prop_assert_eq!(sub.n_rows(), n.min(cap));
        for (r, y) in sub.rows().iter().zip(sub.labels()) {
            let Cell::Number(id) = r[1] else { panic!("numeric") };
            let src = id as usize;
            prop_assert_eq!(&ds.rows()[src], r);
            prop_assert_eq!(ds.labels()[src], *y);
        }
    }

    #[test]
    fn kind_inference_is_idempotent_and_order_free(values in prop::collection::vec(prop_oneof![
        Just(None), (0i32..40).prop_map(|v| Some(v as f64)), (-5.0f64..5.0).prop_map(Some)
    ], 4..40), seed in any::<u64>()) {
        let n = values.len();
        let rows: Vec<Vec<Cell>> = values.iter().map(|v| vec![v.map_or(Cell::Missing, Cell::Number)]).collect();
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let meta = vec![ColumnMeta { name: "v".into(), kind: ColumnKind::Numerical, source: KindSource::Inferred }];
        let ds = Dataset::new("k", rows, labels, vec!["a".into(), "b".into()], meta).unwrap();
        let once = infer_column_kinds(ds.clone());
        let twice = infer_column_kinds(once.clone());
        prop_assert_eq!(once.columns(), twice.columns());
        let mut perm: Vec<usize> = (0..n).collect();
        let mut r = rng(seed);
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let shuffled = infer_column_kinds(ds.select_rows(&perm));
        prop_assert_eq!(once.columns()[0].kind, shuffled.columns()[0].kind);
    }

    #[test]
    fn standardized_pool_has_zero_mean_unit_variance(xs in prop::collection::vec(-1e3f64..1e3, 4..60)) {
        let n = xs.len();
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let features: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x + 0.5]).collect();
        let meta = vec![ColumnMeta { name: "x".into(), kind: ColumnKind::Numerical, source: KindSource::Metadata }];
        let rows: Vec<Vec<Cell>> = features.iter().map(|r| vec![Cell::Number(r[0])]).collect();
        let ds = Dataset::new("z", rows, labels, vec!["a".into(), "b".into()], meta).unwrap();
        let pool: Vec<usize> = (0..n).collect();
        let model = fit_preprocessor(&ds, &pool).unwrap();
        let z = model.transform_rows(&ds, &pool).unwrap();
        let col = z.column(0);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        prop_assert!(mean.abs() < 1e-9);
        let ColumnTransform::Numerical { std, .. } = &model.columns()[0] else { panic!("numerical") };
        if *std != 1.0 || var > 0.0 {
            prop_assert!((var - 1.0).abs() < 1e-6 || var == 0.0, "var {var}");
        }
    }

    #[test]
    fn predictors_emit_simplex_rows(seed in any::<u64>(), n_ctx in 1usize..25, n_q in 1usize..20, d in 1usize..6, k in 2usize..5) {
        let mut r = rng(seed);
        let cx = random_matrix(&mut r, n_ctx, d);
        let q = random_matrix(&mut r, n_q, d);
        let cy: Vec<usize> = (0..n_ctx).map(|i| (i * 7 + seed as usize) % k).collect();
        let p = neighbor_predict(cx.view(), &cy, q.view(), k, &NeighborConfig::default()).unwrap();
        let model = fit_linear(cx.view(), &cy, k, &LinearConfig::default()).unwrap();
        for m in [p, model.predict_proba(q.view()).unwrap()] {
            for row in m.values().rows() {
                prop_assert!((row.sum() - 1.0).abs() < 1e-6);
                prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
    }

    #[test]
    fn neighbor_vote_ignores_context_order(seed in any::<u64>(), n_ctx in 2usize..30) {
        let mut r = rng(seed);
        let cx = random_matrix(&mut r, n_ctx, 3);
        let q = random_matrix(&mut r, 5, 3);
        let cy: Vec<usize> = (0..n_ctx).map(|i| i % 3).collect();
        let mut perm: Vec<usize> = (0..n_ctx).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let px = Array2::from_shape_fn((n_ctx, 3), |(i, j)| cx[[perm[i], j]]);
        let py: Vec<usize> = perm.iter().map(|&i| cy[i]).collect();
        let cfg = NeighborConfig::default();
        let a = neighbor_predict(cx.view(), &cy, q.view(), 3, &cfg).unwrap();
        let b = neighbor_predict(px.view(), &py, q.view(), 3, &cfg).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn every_strategy_returns_a_valid_batch(seed in any::<u64>(), n_pool in 1usize..60, b in 1usize..15, s in 0usize..5) {
        let mut r = rng(seed);
        let pool = random_matrix(&mut r, n_pool, 3);
        let cx = random_matrix(&mut r, 4, 3);
        let cy = vec![0, 1, 2, 1];
        let input = SelectionInput { context_x: cx.view(), context_y: &cy, n_classes: 3, pool_x: pool.view() };
        let cfg = AcquisitionConfig::new(AcqStrategy::ALL[s]);
        let q = select_batch(&cfg, &mut NeighborPredictor::default(), &input, b, seed).unwrap().into_indices();
        let mut sorted = q.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), q.len());
        prop_assert_eq!(q.len(), b.min(n_pool));
        prop_assert!(q.iter().all(|&i| i < n_pool));
    }

    #[test]
    fn coreset_distances_match_recomputation(seed in any::<u64>(), n in 1usize..60, d in 1usize..8, n_lab in 0usize..4) {
        let mut r = rng(seed);
        let pool = random_matrix(&mut r, n, d);
        let lab = random_matrix(&mut r, n_lab, d);
        let mut state = CoresetState::new(pool.view(), lab.view());
        let mut centers: Vec<Vec<f64>> = lab.rows().into_iter().map(|x| x.to_vec()).collect();
        for _ in 0..n.min(6) {
            let q = state.farthest().unwrap();
            state.add_center(pool.view(), q);
            centers.push(pool.row(q).to_vec());
            for (a, b) in state.d_min().iter().zip(naive_d_min(pool.view(), &centers)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn lloyd_iterations_never_raise_inertia(seed in any::<u64>(), n in 1usize..80, k in 1usize..8) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, 2);
        let res = kmeans(x.view(), k.min(n), &KMeansConfig::default(), seed);
        for w in res.inertia_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", res.inertia_trace);
        }
    }

    #[test]
    fn hybrid_with_whole_pool_batch_takes_every_candidate(seed in any::<u64>(), n in 1usize..30) {
        let mut r = rng(seed);
        let pool = random_matrix(&mut r, n, 2);
        let p = random_proba(&mut r, n, 3);
        let mut q = select_hybrid(&p, pool.view(), n, &AcquisitionConfig::default(), seed).into_indices();
        q.sort_unstable();
        prop_assert_eq!(q, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn auc_ignores_monotone_rescaling(scores in prop::collection::vec(-20i32..20, 2..40), flips in prop::collection::vec(any::<bool>(), 40)) {
        let s: Vec<f64> = scores.iter().map(|&v| v as f64).collect();
        let t: Vec<f64> = s.iter().map(|v| v * v * v + 3.0 * v + 7.0).collect();
        let pos: Vec<bool> = flips[..s.len()].to_vec();
        prop_assert_eq!(binary_auc(&s, &pos), binary_auc(&t, &pos));
    }

    #[test]
    fn kappa_ignores_class_relabeling(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..50), perm_seed in any::<u64>()) {
        let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let mut perm: Vec<usize> = (0..4).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng(perm_seed));
        let t2: Vec<usize> = t.iter().map(|&c| perm[c]).collect();
        let p2: Vec<usize> = p.iter().map(|&c| perm[c]).collect();
        let a = cohen_kappa(&t, &p);
        prop_assert!((-1.0..=1.0).contains(&a));
        prop_assert!((a - cohen_kappa(&t2, &p2)).abs() < 1e-12);
    }

    #[test]
    fn bh_matches_step_up_oracle(p in prop::collection::vec(0.0f64..0.2, 1..30)) {
        let q = bh_adjust(&p);
        let oracle = step_up_rejections(&p, 0.05);
        for i in 0..p.len() {
            prop_assert!(q[i] >= p[i] && q[i] <= 1.0);
            prop_assert_eq!(q[i] <= 0.05, oracle[i]);
        }
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        for w in order.windows(2) {
            prop_assert!(q[w[0]] <= q[w[1]]);
        }
    }

    #[test]
    fn wilcoxon_branches_agree_at_twelve(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a: Vec<f64> = (0..12).map(|_| rand::Rng::random_range(&mut r, -1.0..1.0)).collect();
        let b: Vec<f64> = (0..12).map(|_| rand::Rng::random_range(&mut r, -1.0..1.0)).collect();
        let exact = wilcoxon_signed_rank_with(&a, &b, WilcoxonMethod::Exact).unwrap();
        let normal = wilcoxon_signed_rank_with(&a, &b, WilcoxonMethod::Normal).unwrap();
        prop_assert!((exact.p_value - normal.p_value).abs() <= 0.02, "{} vs {}", exact.p_value, normal.p_value);
        prop_assert_eq!(wilcoxon_signed_rank(&a, &b).unwrap().p_value, wilcoxon_signed_rank(&b, &a).unwrap().p_value);
    }
}

#[test]
fn probability_matrix_rejects_off_simplex_rows() {
    assert!(ProbabilityMatrix::from_rows(&[vec![0.5, 0.3]], 2).is_err());
    assert!(ProbabilityMatrix::from_rows(&[vec![1.2, -0.2]], 2).is_err());
    assert!(ProbabilityMatrix::from_rows(&[vec![0.5, 0.5 + 5e-7]], 2).is_ok());
}
