//! Benchmark harness: expand an experiment grid into runs, execute them on a
//! worker pool, persist one JSON record per run, and aggregate the store into
//! summary, significance and learning-curve tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acquisition::{AcquisitionConfig, Strategy};
use crate::active_loop::{run_active_loop, LoopConfig, RunRecord, RunSeeds, RECORD_VERSION};
use crate::data::{load_dataset, stratified_split, subsample, two_gaussians, Dataset, DEFAULT_SUBSAMPLE_CAP};
use crate::error::{Error, Result};
use crate::predictor::PredictorSpec;
use crate::seed;
use crate::stats::{bh_adjust, bh_reject, wilcoxon_signed_rank, Summary};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticSpec {
    TwoGaussians {
        n: usize,
        separation: f64,
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_dim() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSpec>,
}

impl DatasetSpec {
    pub fn csv(name: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        DatasetSpec {
            name: name.into(),
            path: Some(path.into()),
            meta: None,
            synthetic: None,
        }
    }

    pub fn synthetic(name: impl Into<String>, spec: SyntheticSpec) -> Self {
        DatasetSpec {
            name: name.into(),
            path: None,
            meta: None,
            synthetic: Some(spec),
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        let ds = match (&self.path, &self.synthetic) {
            (Some(path), None) => load_dataset(path, self.meta.as_deref())?,
            (None, Some(SyntheticSpec::TwoGaussians { n, separation, dim, seed })) => {
                two_gaussians(*n, *separation, *dim, *seed)
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "dataset {:?} needs exactly one of `path` or `synthetic`",
                    self.name
                )))
            }
        };
        Ok(ds.with_name(self.name.clone()))
    }
}

/// A strategy entry is either a bare name or a full acquisition config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum StrategyEntry {
    Name(Strategy),
    Full(AcquisitionConfig),
}

fn de_strategies<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<AcquisitionConfig>, D::Error> {
    let entries: Vec<StrategyEntry> = Vec::deserialize(d)?;
    Ok(entries
        .into_iter()
        .map(|e| match e {
            StrategyEntry::Name(s) => AcquisitionConfig::new(s),
            StrategyEntry::Full(c) => c,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    #[serde(deserialize_with = "de_strategies")]
    pub strategies: Vec<AcquisitionConfig>,
    pub predictor: PredictorSpec,
    pub seeds: Vec<u64>,
    pub batch_sizes: Vec<usize>,
    pub budget: usize,
    pub stop_fraction: f64,
    pub test_fraction: f64,
    pub subsample_cap: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            datasets: Vec::new(),
            strategies: Strategy::ALL.into_iter().map(AcquisitionConfig::new).collect(),
            predictor: PredictorSpec::default(),
            seeds: (0..10).collect(),
            batch_sizes: vec![10],
            budget: 100,
            stop_fraction: 0.5,
            test_fraction: 0.3,
            subsample_cap: DEFAULT_SUBSAMPLE_CAP,
            master_seed: 0,
            output_dir: PathBuf::from("results"),
            jobs: 1,
        }
    }
}

fn check_name(kind: &str, name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && !name.contains("__")
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{kind} name {name:?} must be non-empty, use [A-Za-z0-9._-] and not contain \"__\""
        )))
    }
}

impl ExperimentConfig {
    /// Read a config file. Relative dataset and output paths are resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for ds in &mut cfg.datasets {
            ds.path.as_mut().map(resolve);
            ds.meta.as_mut().map(resolve);
        }
        resolve(&mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() || self.strategies.is_empty() || self.seeds.is_empty() || self.batch_sizes.is_empty() {
            return Err(Error::InvalidArgument(
                "datasets, strategies, seeds and batch_sizes must be non-empty".into(),
            ));
        }
        let mut names = BTreeSet::new();
        for ds in &self.datasets {
            check_name("dataset", &ds.name)?;
            if !names.insert(ds.name.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate dataset {:?}", ds.name)));
            }
        }
        let mut labels = BTreeSet::new();
        for s in &self.strategies {
            s.validate()?;
            let label = s.label();
            check_name("strategy", &label)?;
            if !labels.insert(label.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate strategy {label:?}")));
            }
        }
        if self.batch_sizes.contains(&0) {
            return Err(Error::InvalidArgument("batch sizes must be >= 1".into()));
        }
        if !(self.stop_fraction > 0.0 && self.stop_fraction <= 1.0) {
            return Err(Error::InvalidArgument("stop_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// SHA-256 of the config with `jobs` and `output_dir` left out, so those
    /// can change between resumed invocations.
    pub fn fingerprint(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(map) = value.as_object_mut() {
            map.remove("jobs");
            map.remove("output_dir");
        }
        let digest = Sha256::digest(serde_json::to_vec(&value)?);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Every run of the grid, in a fixed order.
    pub fn run_keys(&self) -> Vec<RunKey> {
        let mut keys = Vec::new();
        for ds in &self.datasets {
            for s in &self.strategies {
                for &b in &self.batch_sizes {
                    for &seed in &self.seeds {
                        keys.push(RunKey {
                            dataset: ds.name.clone(),
                            strategy: s.label(),
                            batch_size: b,
                            seed,
                        });
                    }
                }
            }
        }
        keys
    }

    /// Split and initial-context seeds depend only on dataset and seed index,
    /// so every strategy and batch size sees the same split for a given seed.
    pub fn run_seeds(&self, key: &RunKey) -> (u64, RunSeeds) {
        let split = seed::derive(self.master_seed, &format!("split:{}", key.dataset), key.seed);
        let init = seed::derive(self.master_seed, &format!("init:{}", key.dataset), key.seed);
        let acquisition = seed::hash64(&[
            &self.master_seed.to_le_bytes(),
            key.dataset.as_bytes(),
            key.strategy.as_bytes(),
            &(key.batch_size as u64).to_le_bytes(),
            &key.seed.to_le_bytes(),
        ]);
        (split, RunSeeds { init, acquisition })
    }

    fn subsample_seed(&self, dataset: &str) -> u64 {
        seed::derive(self.master_seed, &format!("subsample:{dataset}"), 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RunKey {
    pub dataset: String,
    pub strategy: String,
    pub batch_size: usize,
    pub seed: u64,
}

impl RunKey {
    pub fn file_name(&self) -> String {
        format!(
            "{}__{}__b{}__s{}.json",
            self.dataset, self.strategy, self.batch_size, self.seed
        )
    }

    pub fn of(record: &RunRecord) -> RunKey {
        RunKey {
            dataset: record.dataset.clone(),
            strategy: record.strategy.clone(),
            batch_size: record.batch_size,
            seed: record.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub engine_version: String,
    pub record_version: u32,
    pub config_hash: String,
    pub config: ExperimentConfig,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Directory of run records plus a manifest describing the experiment.
#[derive(Debug, Clone)]
pub struct ResultStore {
    root: PathBuf,
}

impl ResultStore {
    /// Open an existing store for reading.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        if !root.join("runs").is_dir() {
            return Err(Error::Store(format!("{} is not a result store", root.display())));
        }
        Ok(ResultStore { root })
    }

    /// Create a store for `cfg`, or reopen one written by the same config.
    pub fn create(root: impl Into<PathBuf>, cfg: &ExperimentConfig) -> Result<Self> {
        let root = root.into();
        let runs = root.join("runs");
        fs::create_dir_all(&runs).map_err(|e| Error::io(&runs, e))?;
        let manifest_path = root.join("manifest.json");
        let hash = cfg.fingerprint()?;
        if manifest_path.exists() {
            let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
            let existing: Manifest = serde_json::from_str(&text)?;
            if existing.config_hash != hash {
                return Err(Error::Store(format!(
                    "{} was written by a different configuration",
                    root.display()
                )));
            }
        } else {
            let manifest = Manifest {
                engine_version: ENGINE_VERSION.to_string(),
                record_version: RECORD_VERSION,
                config_hash: hash,
                config: cfg.clone(),
            };
            write_atomic(&manifest_path, &serde_json::to_vec_pretty(&manifest)?)?;
        }
        Ok(ResultStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> Result<Manifest> {
        let path = self.root.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn record_path(&self, key: &RunKey) -> PathBuf {
        self.root.join("runs").join(key.file_name())
    }

    pub fn load(&self, key: &RunKey) -> Result<Option<RunRecord>> {
        let path = self.record_path(key);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Some(serde_json::from_str(&text)?))
    }

    pub fn save(&self, record: &RunRecord) -> Result<()> {
        let path = self.record_path(&RunKey::of(record));
        write_atomic(&path, &serde_json::to_vec_pretty(record)?)
    }

    /// Every record in the store, ordered by key.
    pub fn records(&self) -> Result<Vec<RunRecord>> {
        let dir = self.root.join("runs");
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut records = Vec::with_capacity(paths.len());
        for path in paths {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let record: RunRecord = serde_json::from_str(&text)?;
            if record.record_version != RECORD_VERSION {
                return Err(Error::Store(format!(
                    "{} has record version {}, expected {RECORD_VERSION}",
                    path.display(),
                    record.record_version
                )));
            }
            records.push(record);
        }
        records.sort_by_key(RunKey::of);
        Ok(records)
    }
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ExperimentReport {
    pub completed: usize,
    /// Runs already present in the store.
    pub skipped: usize,
    pub failed: Vec<(RunKey, String)>,
}

impl ExperimentReport {
    pub fn success(&self) -> bool {
        self.failed.is_empty()
    }
}

/// Run every missing or incomplete run of the grid on `cfg.jobs` threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let store = ResultStore::create(&cfg.output_dir, cfg)?;

    let mut datasets = BTreeMap::new();
    for spec in &cfg.datasets {
        let ds = spec.load()?;
        let ds = subsample(&ds, cfg.subsample_cap, cfg.subsample_seed(&spec.name))?;
        datasets.insert(spec.name.clone(), ds);
    }
    let strategies: BTreeMap<String, &AcquisitionConfig> =
        cfg.strategies.iter().map(|s| (s.label(), s)).collect();

    let mut report = ExperimentReport::default();
    let mut pending = Vec::new();
    for key in cfg.run_keys() {
        match store.load(&key) {
            Ok(Some(rec)) if rec.complete => report.skipped += 1,
            _ => pending.push(key),
        }
    }

    let next = AtomicUsize::new(0);
    let outcomes = Mutex::new(Vec::new());
    let jobs = cfg.jobs.max(1).min(pending.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(key) = pending.get(i) else { break };
                let outcome = execute(cfg, &store, &datasets[&key.dataset], strategies[&key.strategy], key);
                outcomes.lock().expect("outcome lock").push((key.clone(), outcome));
            });
        }
    });

    let mut outcomes = outcomes.into_inner().expect("outcome lock");
    outcomes.sort_by(|a, b| a.0.cmp(&b.0));
    for (key, outcome) in outcomes {
        match outcome {
            Ok(()) => report.completed += 1,
            Err(msg) => report.failed.push((key, msg)),
        }
    }
    Ok(report)
}

fn execute(
    cfg: &ExperimentConfig,
    store: &ResultStore,
    ds: &Dataset,
    acquisition: &AcquisitionConfig,
    key: &RunKey,
) -> std::result::Result<(), String> {
    let (split_seed, seeds) = cfg.run_seeds(key);
    let run = || -> Result<RunRecord> {
        let split = stratified_split(ds, cfg.test_fraction, split_seed)?;
        let mut predictor = cfg.predictor.build()?;
        let loop_cfg = LoopConfig {
            budget: cfg.budget,
            batch_size: key.batch_size,
            stop_fraction: cfg.stop_fraction,
            evaluate_at_init: true,
        };
        let mut record = run_active_loop(ds, &split, acquisition, &mut *predictor, &loop_cfg, seeds)?;
        record.seed = key.seed;
        Ok(record)
    };
    let record = run().map_err(|e| e.to_string())?;
    store.save(&record).map_err(|e| e.to_string())?;
    match &record.error {
        None => Ok(()),
        Some(e) => Err(format!("run stopped early: {e}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Aulc,
    FinalKappa,
    FinalAuc,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Aulc => "aulc",
            Metric::FinalKappa => "final_kappa",
            Metric::FinalAuc => "final_auc",
        }
    }

    /// The metric for one run; `None` for incomplete runs or undefined values.
    pub fn of(self, record: &RunRecord) -> Option<f64> {
        if !record.complete {
            return None;
        }
        match self {
            Metric::Aulc => record.aulc().ok(),
            Metric::FinalKappa => record.final_kappa(),
            Metric::FinalAuc => record.final_auc(),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Metric::Aulc, Metric::FinalKappa, Metric::FinalAuc]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric {s:?}")))
    }
}

/// Six significant digits; empty for a missing value.
pub fn format_sig(value: Option<f64>) -> String {
    match value {
        None => String::new(),
        Some(v) if !v.is_finite() => String::new(),
        Some(0.0) => "0".to_string(),
        Some(v) => {
            let magnitude = v.abs().log10().floor() as i32;
            let decimals = (5 - magnitude).max(0) as usize;
            format!("{v:.decimals$}")
        }
    }
}

type Cell3 = (String, usize, String);

fn group(records: &[RunRecord]) -> BTreeMap<Cell3, Vec<&RunRecord>> {
    let mut groups: BTreeMap<Cell3, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.dataset.clone(), r.batch_size, r.strategy.clone()))
            .or_default()
            .push(r);
    }
    groups
}

/// Per (dataset, batch size, strategy): mean, standard deviation and count of
/// `metric`, with `best` marking the highest mean within each dataset and
/// batch size.
pub fn summarize(store: &ResultStore, metric: Metric) -> Result<String> {
    let records = store.records()?;
    let groups = group(&records);
    let summaries: BTreeMap<&Cell3, Option<Summary>> = groups
        .iter()
        .map(|(k, rs)| {
            let values: Vec<f64> = rs.iter().filter_map(|r| metric.of(r)).collect();
            (k, Summary::of(&values))
        })
        .collect();
    let mut best: BTreeMap<(String, usize), f64> = BTreeMap::new();
    for (k, s) in &summaries {
        if let Some(s) = s {
            let e = best.entry((k.0.clone(), k.1)).or_insert(f64::NEG_INFINITY);
            *e = e.max(s.mean);
        }
    }
    let mut out = String::from("dataset,batch_size,strategy,metric,mean,std,n,best\n");
    for (k, s) in &summaries {
        let (mean, std, n, is_best) = match s {
            Some(s) => (
                Some(s.mean),
                Some(s.std),
                s.n,
                best.get(&(k.0.clone(), k.1)) == Some(&s.mean),
            ),
            None => (None, None, 0, false),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            k.0,
            k.1,
            k.2,
            metric.as_str(),
            format_sig(mean),
            format_sig(std),
            n,
            is_best
        )
        .expect("string write");
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificanceRow {
    pub dataset: String,
    pub batch_size: usize,
    pub n: usize,
    pub mean_difference: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub p_adjusted: f64,
    /// "higher" or "lower" when `a` differs significantly from `b`, else "none".
    pub verdict: String,
}

/// Paired Wilcoxon tests of strategy `a` against `b` for every dataset and
/// batch size, with Benjamini-Hochberg adjustment across datasets within each
/// batch size. Runs are paired by seed and both sides must cover the same seeds.
pub fn significance_report(
    store: &ResultStore,
    a: &str,
    b: &str,
    metric: Metric,
    alpha: f64,
) -> Result<Vec<SignificanceRow>> {
    let records = store.records()?;
    let groups = group(&records);
    let by_seed = |rs: &[&RunRecord]| -> BTreeMap<u64, Option<f64>> {
        rs.iter().map(|r| (r.seed, metric.of(r))).collect()
    };
    let mut cells: BTreeMap<(String, usize), ()> = BTreeMap::new();
    for (d, bs, s) in groups.keys() {
        if s == a || s == b {
            cells.insert((d.clone(), *bs), ());
        }
    }
    if cells.is_empty() {
        return Err(Error::InvalidArgument(format!("no runs for strategies {a:?} or {b:?}")));
    }
    let mut rows = Vec::new();
    for (d, bs) in cells.keys() {
        let get = |s: &str| {
            groups
                .get(&(d.clone(), *bs, s.to_string()))
                .map(|rs| by_seed(rs))
                .unwrap_or_default()
        };
        let (sa, sb) = (get(a), get(b));
        if sa.keys().ne(sb.keys()) {
            return Err(Error::InvalidArgument(format!(
                "seed sets differ for {d} (batch {bs}): {a} has {:?}, {b} has {:?}",
                sa.keys().collect::<Vec<_>>(),
                sb.keys().collect::<Vec<_>>()
            )));
        }
        let mut xa = Vec::new();
        let mut xb = Vec::new();
        for (seed, va) in &sa {
            match (va, sb[seed]) {
                (Some(va), Some(vb)) => {
                    xa.push(*va);
                    xb.push(vb);
                }
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "{d} (batch {bs}) seed {seed} has no {} value for both strategies",
                        metric.as_str()
                    )))
                }
            }
        }
        let test = wilcoxon_signed_rank(&xa, &xb)?;
        let mean_difference = xa.iter().zip(&xb).map(|(x, y)| x - y).sum::<f64>() / xa.len() as f64;
        rows.push(SignificanceRow {
            dataset: d.clone(),
            batch_size: *bs,
            n: xa.len(),
            mean_difference,
            statistic: test.statistic,
            p_value: test.p_value,
            p_adjusted: f64::NAN,
            verdict: String::new(),
        });
    }
    let batch_sizes: BTreeSet<usize> = rows.iter().map(|r| r.batch_size).collect();
    for bs in batch_sizes {
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].batch_size == bs).collect();
        let p: Vec<f64> = idx.iter().map(|&i| rows[i].p_value).collect();
        let rejected = bh_reject(&p, alpha);
        for ((&i, q), reject) in idx.iter().zip(bh_adjust(&p)).zip(rejected) {
            let row = &mut rows[i];
            row.p_adjusted = q;
            row.verdict = if reject && row.mean_difference > 0.0 {
                "higher"
            } else if reject && row.mean_difference < 0.0 {
                "lower"
            } else {
                "none"
            }
            .to_string();
        }
    }
    Ok(rows)
}

pub fn significance_csv(rows: &[SignificanceRow]) -> String {
    let mut out = String::from("dataset,batch_size,n,mean_difference,statistic,p_value,p_adjusted,verdict\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.dataset,
            r.batch_size,
            r.n,
            format_sig(Some(r.mean_difference)),
            format_sig(Some(r.statistic)),
            format_sig(Some(r.p_value)),
            format_sig(Some(r.p_adjusted)),
            r.verdict
        )
        .expect("string write");
    }
    out
}

/// Mean kappa (with a normal 95% interval) and mean AUC per acquisition
/// step, across the seeds of each (dataset, batch size, strategy).
pub fn learning_curves(store: &ResultStore) -> Result<String> {
    let records = store.records()?;
    let mut out = String::from(
        "dataset,batch_size,strategy,step,n_labeled,kappa_mean,kappa_ci_low,kappa_ci_high,auc_mean,n_runs\n",
    );
    for ((d, bs, s), rs) in group(&records) {
        let steps = rs.iter().map(|r| r.rounds.len()).max().unwrap_or(0);
        for t in 0..steps {
            let rounds: Vec<_> = rs.iter().filter_map(|r| r.rounds.get(t)).collect();
            let kappas: Vec<f64> = rounds.iter().map(|r| r.kappa).collect();
            let aucs: Vec<f64> = rounds.iter().filter_map(|r| r.auc).collect();
            let k = Summary::of(&kappas).expect("at least one round");
            let h = k.ci95_half_width();
            writeln!(
                out,
                "{d},{bs},{s},{t},{},{},{},{},{},{}",
                rounds[0].n_labeled,
                format_sig(Some(k.mean)),
                format_sig(Some(k.mean - h)),
                format_sig(Some(k.mean + h)),
                format_sig(Summary::of(&aucs).map(|s| s.mean)),
                rounds.len()
            )
            .expect("string write");
        }
    }
    Ok(out)
}
