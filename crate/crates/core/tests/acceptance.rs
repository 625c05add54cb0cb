//! Acceptance suite. Each check prints one PASS/FAIL line; the process exits
//! non-zero if any check fails.

mod common;

use std::fmt::Display;
use std::process::ExitCode;
use std::time::Instant;

use ndarray::{array, Array2};
use rand::Rng;

use tabal::acquisition::{
    candidate_count_hybrid, compute_n_proxy, select_coreset, select_hybrid, select_margin, select_proxy_hybrid,
    AcquisitionConfig, CoresetState, Strategy,
};
use tabal::active_loop::{run_active_loop, LoopConfig, RunRecord, RunSeeds};
use tabal::data::{stratified_split, two_gaussians};
use tabal::harness::{
    learning_curves, run_experiment, summarize, DatasetSpec, ExperimentConfig, Metric, ResultStore, SyntheticSpec,
};
use tabal::metrics::{aulc_norm, cohen_kappa, roc_auc_ovr_macro, LearningCurve};
use tabal::predictor::{
    Counting, Endpoint, ExternalConfig, ExternalPredictor, NeighborPredictor, ProbabilityMatrix, WeightedLogLoss,
};
use tabal::stats::{bh_adjust, bh_reject, wilcoxon_signed_rank};

use common::{
    brute_coreset, brute_hybrid, brute_margin, naive_d_min, random_matrix, random_proba, rng, spawn_fixed_server,
    step_up_rejections, FixedPredictor,
};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: impl Display) -> Check {
    if ok {
        Ok(detail.to_string())
    } else {
        Err(detail.to_string())
    }
}

fn selection_oracles() -> Check {
    let start = Instant::now();
    let mut r = rng(20_240);
    let cfg = AcquisitionConfig::default();
    for case in 0..200 {
        let n = r.random_range(1..=50);
        let d = r.random_range(1..=8);
        let k = r.random_range(2..=5);
        let b = r.random_range(1..=12);
        let pool = random_matrix(&mut r, n, d);
        let n_lab = r.random_range(1..=6);
        let labeled = random_matrix(&mut r, n_lab, d);
        let p = random_proba(&mut r, n, k);
        let seed = r.random::<u64>();
        if select_margin(&p, b).indices() != brute_margin(&p, b).as_slice() {
            return Err(format!("margin differs on instance {case}"));
        }
        if select_coreset(pool.view(), labeled.view(), b).indices() != brute_coreset(pool.view(), labeled.view(), b).as_slice() {
            return Err(format!("coreset differs on instance {case}"));
        }
        if select_hybrid(&p, pool.view(), b, &cfg, seed).indices() != brute_hybrid(&p, pool.view(), b, &cfg, seed).as_slice() {
            return Err(format!("hybrid differs on instance {case}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, format!("200 instances match, {secs:.2}s (limit 10s)"))
}

fn coreset_bookkeeping() -> Check {
    let mut r = rng(77);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = r.random_range(1..=100);
        let d = r.random_range(1..=10);
        let pool = random_matrix(&mut r, n, d);
        let n_lab = r.random_range(1..=5);
        let labeled = random_matrix(&mut r, n_lab, d);
        let mut state = CoresetState::new(pool.view(), labeled.view());
        let mut centers: Vec<Vec<f64>> = labeled.rows().into_iter().map(|x| x.to_vec()).collect();
        for _ in 0..r.random_range(1..=n.min(15)) {
            let q = state.farthest().expect("untaken point");
            state.add_center(pool.view(), q);
            centers.push(pool.row(q).to_vec());
            for (a, b) in state.d_min().iter().zip(naive_d_min(pool.view(), &centers)) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    ensure(worst <= 1e-12, format!("max |incremental - naive| = {worst:e} (limit 1e-12)"))
}

fn clamp_formulas() -> Check {
    let proxy = [(10_000, 500), (1000, 200), (150, 150), (100_000, 2000)];
    for (u, want) in proxy {
        let got = compute_n_proxy(u, 0.05, 200, 2000);
        if got != want {
            return Err(format!("n_proxy({u}) = {got}, want {want}"));
        }
    }
    let cand = [((300, 10), 150), ((30, 10), 20), ((10, 10), 10)];
    for ((u, b), want) in cand {
        let got = candidate_count_hybrid(u, b);
        if got != want {
            return Err(format!("n_cand({u}, {b}) = {got}, want {want}"));
        }
    }
    Ok("all 7 table rows exact".into())
}

fn proxy_budget() -> Check {
    let mut r = rng(5);
    let cfg = AcquisitionConfig::new(Strategy::ProxyHybrid);
    let mut counts = Vec::new();
    for round in 0..3 {
        let pool = random_matrix(&mut r, 10_000, 4);
        let n_ctx = 2 + 10 * round;
        let cx = random_matrix(&mut r, n_ctx, 4);
        let cy: Vec<usize> = (0..n_ctx).map(|i| i % 2).collect();
        let mut predictor = Counting::new(NeighborPredictor::default());
        let q = select_proxy_hybrid(&mut predictor, cx.view(), &cy, 2, pool.view(), 10, &cfg, round as u64)
            .map_err(|e| e.to_string())?;
        if q.len() != 10 {
            return Err(format!("batch of {} instead of 10", q.len()));
        }
        counts.push(predictor.rows());
    }
    ensure(counts.iter().all(|&c| c == 500), format!("main-predictor scorings per round {counts:?} (want 500)"))
}

fn metric_fixtures() -> Check {
    let kappa = cohen_kappa(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 0, 1, 1]);
    if (kappa - 1.0 / 3.0).abs() > 1e-12 {
        return Err(format!("kappa = {kappa}"));
    }
    let p = ProbabilityMatrix::new(array![[0.9, 0.1], [0.6, 0.4], [0.65, 0.35], [0.2, 0.8]]).unwrap();
    let auc = roc_auc_ovr_macro(&[0, 0, 1, 1], &p).unwrap();
    if auc != 0.75 {
        return Err(format!("auc = {auc}"));
    }
    let curve = LearningCurve::new(vec![(2, 0.0), (51, 0.4), (100, 0.8)]).unwrap();
    let a = aulc_norm(&curve, 100).unwrap();
    if (a - 0.4).abs() > 1e-12 {
        return Err(format!("trapezoid aulc = {a}"));
    }
    for c in [0.0, 0.37, 1.0] {
        let flat = LearningCurve::new(vec![(2, c), (12, c), (22, c), (100, c)]).unwrap();
        let v = aulc_norm(&flat, 100).unwrap();
        if v != c {
            return Err(format!("constant {c} curve gives {v}"));
        }
    }
    Ok(format!("kappa {kappa:.12}, auc {auc}, aulc {a:.12}, constant curves exact"))
}

fn statistics() -> Check {
    let w3 = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap().p_value;
    if w3 != 0.25 {
        return Err(format!("wilcoxon([1,2,3]) = {w3}"));
    }
    let diffs: Vec<f64> = (1..=10).map(|i| 0.003 * i as f64).collect();
    let w10 = wilcoxon_signed_rank(&diffs, &[0.0; 10]).unwrap().p_value;
    if (w10 - 0.001953).abs() > 1e-6 {
        return Err(format!("wilcoxon(10 positive) = {w10}"));
    }
    let bh = bh_adjust(&[0.01, 0.02, 0.03, 0.04]);
    if bh != vec![0.04; 4] {
        return Err(format!("bh([.01,.02,.03,.04]) = {bh:?}"));
    }
    let mut p = vec![0.001953; 6];
    let mut r = rng(9);
    p.extend((0..14).map(|_| r.random_range(0.05..1.0)));
    let tied = bh_adjust(&p)[0];
    if (tied - 0.00651).abs() > 1e-5 {
        return Err(format!("six tied p at m=20 adjust to {tied}"));
    }
    for v in 0..100 {
        let m = r.random_range(1..=25);
        let p: Vec<f64> = (0..m).map(|_| r.random_range(0.0..0.12f64).powi(2) * 5.0).collect();
        if bh_reject(&p, 0.05) != step_up_rejections(&p, 0.05) {
            return Err(format!("rejection set differs from step-up oracle on vector {v}"));
        }
    }
    Ok(format!("p = {w3}, {w10:.9}; bh ties -> {tied:.6}; 100/100 step-up sets equal"))
}

fn gradient_check() -> Check {
    let mut r = rng(31);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = r.random_range(2..=30);
        let d = r.random_range(1..=5);
        let k = r.random_range(2..=4);
        let x = random_matrix(&mut r, n, d);
        let y: Vec<usize> = (0..n).map(|i| if i < k { i } else { r.random_range(0..k) }).collect();
        let loss = WeightedLogLoss::new(x.view(), &y, k, r.random_range(0.1..2.0));
        let w = Array2::from_shape_fn(loss.shape(), |_| r.random_range(-1.0..1.0));
        let (_, g) = loss.value_and_gradient(&w);
        let h = 1e-6;
        let mut fd = Array2::zeros(w.raw_dim());
        for idx in ndarray::indices(w.raw_dim()) {
            let mut plus = w.clone();
            plus[idx] += h;
            let mut minus = w.clone();
            minus[idx] -= h;
            fd[idx] = (loss.value(&plus) - loss.value(&minus)) / (2.0 * h);
        }
        let err = (&g - &fd).mapv(|v| v * v).sum().sqrt();
        let scale = g.mapv(|v| v * v).sum().sqrt().max(fd.mapv(|v| v * v).sum().sqrt()).max(1e-12);
        worst = worst.max(err / scale);
    }
    ensure(worst <= 1e-5, format!("max relative error {worst:e} over 20 instances (limit 1e-5)"))
}

fn determinism_grid(out: &std::path::Path, jobs: usize) -> ExperimentConfig {
    ExperimentConfig {
        datasets: vec![
            DatasetSpec::synthetic("blobs-close", SyntheticSpec::TwoGaussians { n: 400, separation: 2.0, dim: 3, seed: 1 }),
            DatasetSpec::synthetic("blobs-apart", SyntheticSpec::TwoGaussians { n: 300, separation: 5.0, dim: 2, seed: 2 }),
        ],
        strategies: [Strategy::Hybrid, Strategy::ProxyHybrid, Strategy::Coreset]
            .map(AcquisitionConfig::new)
            .to_vec(),
        seeds: vec![0, 1, 2],
        output_dir: out.to_path_buf(),
        jobs,
        ..ExperimentConfig::default()
    }
}

fn end_to_end_determinism() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for jobs in [1, 4] {
        let dir = tmp.path().join(format!("jobs{jobs}"));
        let report = run_experiment(&determinism_grid(&dir, jobs)).map_err(|e| e.to_string())?;
        if !report.success() || report.completed != 18 {
            return Err(format!("jobs={jobs}: {report:?}"));
        }
        let store = ResultStore::open(&dir).map_err(|e| e.to_string())?;
        let mut text = String::new();
        for m in [Metric::Aulc, Metric::FinalKappa, Metric::FinalAuc] {
            text += &summarize(&store, m).map_err(|e| e.to_string())?;
        }
        text += &learning_curves(&store).map_err(|e| e.to_string())?;
        outputs.push(text);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        outputs[0] == outputs[1] && secs < 60.0,
        format!(
            "summaries {} across jobs=1/4 ({} bytes), {secs:.2}s (limit 60s)",
            if outputs[0] == outputs[1] { "byte-identical" } else { "DIFFER" },
            outputs[0].len()
        ),
    )
}

fn desk_scale_sanity() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig {
        datasets: vec![DatasetSpec::synthetic(
            "two-gaussians",
            SyntheticSpec::TwoGaussians { n: 500, separation: 8.0, dim: 2, seed: 0 },
        )],
        seeds: (0..10).collect(),
        output_dir: tmp.path().to_path_buf(),
        jobs: 4,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
    if !report.success() {
        return Err(format!("{:?}", report.failed));
    }
    let records = ResultStore::open(tmp.path()).and_then(|s| s.records()).map_err(|e| e.to_string())?;
    let mean = |s: Strategy, f: &dyn Fn(&RunRecord) -> f64| {
        let v: Vec<f64> = records.iter().filter(|r| r.strategy == s.as_str()).map(f).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let random_aulc = mean(Strategy::Random, &|r| r.aulc().unwrap());
    let mut ok = true;
    let mut parts = Vec::new();
    for s in Strategy::ALL {
        let kappa = mean(s, &|r| r.final_kappa().unwrap());
        let aulc = mean(s, &|r| r.aulc().unwrap());
        let pass = kappa >= 0.9 && aulc >= random_aulc - 0.05;
        ok &= pass;
        parts.push(format!(
            "{s}: final kappa {kappa:.3}, aulc {aulc:.3}{}",
            if pass { "" } else { " <-" }
        ));
    }
    ensure(ok, format!("{} (need kappa >= 0.9, aulc >= random - 0.05 = {:.3})", parts.join("; "), random_aulc - 0.05))
}

fn protocol_conformance() -> Check {
    let ds = two_gaussians(240, 2.5, 3, 8);
    let split = stratified_split(&ds, 0.3, 3).unwrap();
    let addr = spawn_fixed_server(Strategy::ALL.len());
    let cfg = LoopConfig { budget: 60, ..LoopConfig::default() };
    let seeds = RunSeeds { init: 5, acquisition: 6 };
    let strip = |mut r: RunRecord| {
        r.rounds.iter_mut().for_each(|round| round.seconds = 0.0);
        r
    };
    for s in Strategy::ALL {
        let acq = AcquisitionConfig::new(s);
        let local = run_active_loop(&ds, &split, &acq, &mut FixedPredictor, &cfg, seeds).map_err(|e| e.to_string())?;
        let external = ExternalConfig { endpoint: Endpoint::Tcp(addr.clone()), timeout_secs: 30.0 };
        let mut remote_predictor = ExternalPredictor::connect(&external).map_err(|e| e.to_string())?;
        let remote = run_active_loop(&ds, &split, &acq, &mut remote_predictor, &cfg, seeds).map_err(|e| e.to_string())?;
        if !remote.complete || strip(local) != strip(remote) {
            return Err(format!("{s}: remote run differs from in-process run"));
        }
    }
    Ok("all 5 strategies give identical records over TCP and in process".into())
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 10] = [
        ("selection oracles", selection_oracles),
        ("coreset bookkeeping", coreset_bookkeeping),
        ("clamp formulas", clamp_formulas),
        ("proxy budget", proxy_budget),
        ("metric fixtures", metric_fixtures),
        ("statistics", statistics),
        ("linear gradient", gradient_check),
        ("end-to-end determinism", end_to_end_determinism),
        ("desk-scale sanity", desk_scale_sanity),
        ("protocol conformance", protocol_conformance),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} acceptance checks passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
