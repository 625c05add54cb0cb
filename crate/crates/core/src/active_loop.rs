//! The pool-based protocol: seed the context with one labeled point per
//! class, then repeatedly select a batch, reveal its labels, move it from the
//! pool into the context and evaluate on the held-out test rows.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{select_batch, AcquisitionConfig, SelectionInput};
use crate::data::{Dataset, SplitResult};
use crate::error::{Error, Result};
use crate::metrics::{aulc_norm, cohen_kappa, roc_auc_ovr_macro, LearningCurve};
use crate::predictor::{Counting, Predictor};
use crate::preprocess::fit_preprocessor;
use crate::seed;

pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    /// Stop once the context holds this many labeled points.
    pub budget: usize,
    pub batch_size: usize,
    /// Stop once this fraction of the initial pool has been queried.
    pub stop_fraction: f64,
    pub evaluate_at_init: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            budget: 100,
            batch_size: 10,
            stop_fraction: 0.5,
            evaluate_at_init: true,
        }
    }
}

/// Seeds consumed by one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub init: u64,
    pub acquisition: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub n_labeled: usize,
    pub kappa: f64,
    pub auc: Option<f64>,
    /// Dataset rows added to the context in this round (empty at t = 0).
    pub queried: Vec<usize>,
    /// Query rows scored by the predictor while selecting this round's batch.
    pub acquisition_evaluations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub record_version: u32,
    pub dataset: String,
    pub strategy: String,
    pub seed: u64,
    pub batch_size: usize,
    pub budget: usize,
    pub n_classes: usize,
    /// Pool size after the initial context was drawn from it.
    pub pool_size: usize,
    pub test_size: usize,
    pub initial_context: Vec<usize>,
    pub rounds: Vec<RoundRecord>,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn kappa_curve(&self) -> Result<LearningCurve> {
        LearningCurve::new(self.rounds.iter().map(|r| (r.n_labeled, r.kappa)).collect())
    }

    pub fn aulc(&self) -> Result<f64> {
        aulc_norm(&self.kappa_curve()?, self.budget)
    }

    pub fn final_kappa(&self) -> Option<f64> {
        self.rounds.last().map(|r| r.kappa)
    }

    pub fn final_auc(&self) -> Option<f64> {
        self.rounds.last().and_then(|r| r.auc)
    }

    /// Every dataset row in the context after the last round.
    pub fn labeled_rows(&self) -> Vec<usize> {
        let mut rows = self.initial_context.clone();
        rows.extend(self.rounds.iter().flat_map(|r| r.queried.iter().copied()));
        rows
    }
}

/// One uniformly drawn pool row per class, in class order.
pub fn init_context(pool: &[usize], labels: &[usize], n_classes: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for &i in pool {
        by_class[labels[i]].push(i);
    }
    by_class
        .iter()
        .enumerate()
        .map(|(c, members)| {
            if members.is_empty() {
                Err(Error::InvalidArgument(format!(
                    "class {c} has no instance in the pool"
                )))
            } else {
                Ok(members[rng.random_range(0..members.len())])
            }
        })
        .collect()
}

fn gather(x: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), x.ncols()));
    for (r, &i) in rows.iter().enumerate() {
        out.row_mut(r).assign(&x.row(i));
    }
    out
}

#[cfg(not(target_arch = "wasm32"))]
struct Stopwatch(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch(std::time::Instant::now())
    }
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

// no monotonic clock on wasm32-unknown-unknown
#[cfg(target_arch = "wasm32")]
struct Stopwatch;

#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch
    }
    fn seconds(&self) -> f64 {
        0.0
    }
}

struct Evaluator<'a> {
    test_x: ArrayView2<'a, f64>,
    test_y: &'a [usize],
    n_classes: usize,
}

impl Evaluator<'_> {
    fn evaluate<P: Predictor + ?Sized>(
        &self,
        predictor: &mut P,
        context_x: ArrayView2<'_, f64>,
        context_y: &[usize],
    ) -> Result<(f64, Option<f64>)> {
        let p = predictor.predict_proba(context_x, context_y, self.test_x, self.n_classes)?;
        let kappa = cohen_kappa(self.test_y, &p.predictions());
        Ok((kappa, roc_auc_ovr_macro(self.test_y, &p)))
    }
}

/// Run one active-learning trajectory.
///
/// Configuration and data errors are returned as `Err`. A predictor failure
/// after the run has started yields `Ok` with `complete == false`, the
/// rounds finished so far and the error message.
pub fn run_active_loop<P: Predictor + ?Sized>(
    ds: &Dataset,
    split: &SplitResult,
    acquisition: &AcquisitionConfig,
    predictor: &mut P,
    cfg: &LoopConfig,
    seeds: RunSeeds,
) -> Result<RunRecord> {
    let k = ds.n_classes();
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be >= 1".into()));
    }
    if cfg.budget < k {
        return Err(Error::InvalidArgument(format!(
            "budget {} is below the class count {k}",
            cfg.budget
        )));
    }
    acquisition.validate()?;
    if split.test_indices.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }

    let model = fit_preprocessor(ds, &split.pool_indices)?;
    let initial = init_context(&split.pool_indices, ds.labels(), k, seeds.init)?;
    let unlabeled: Vec<usize> = split
        .pool_indices
        .iter()
        .copied()
        .filter(|i| !initial.contains(i))
        .collect();
    let pool_z = model.transform_rows(ds, &unlabeled)?;
    let test_z = model.transform_rows(ds, &split.test_indices)?;
    let test_y: Vec<usize> = split.test_indices.iter().map(|&i| ds.labels()[i]).collect();
    let evaluator = Evaluator {
        test_x: test_z.view(),
        test_y: &test_y,
        n_classes: k,
    };

    let mut context_x = model.transform_rows(ds, &initial)?;
    let mut context_y: Vec<usize> = initial.iter().map(|&i| ds.labels()[i]).collect();
    // positions into `unlabeled`, ascending
    let mut remaining: Vec<usize> = (0..unlabeled.len()).collect();

    let mut record = RunRecord {
        record_version: RECORD_VERSION,
        dataset: ds.name().to_string(),
        strategy: acquisition.label(),
        seed: 0,
        batch_size: cfg.batch_size,
        budget: cfg.budget,
        n_classes: k,
        pool_size: unlabeled.len(),
        test_size: test_y.len(),
        initial_context: initial.clone(),
        rounds: Vec::new(),
        complete: false,
        error: None,
    };

    let fail = |mut record: RunRecord, e: Error| {
        record.error = Some(e.to_string());
        Ok(record)
    };

    if cfg.evaluate_at_init {
        let watch = Stopwatch::start();
        let (kappa, auc) = match evaluator.evaluate(predictor, context_x.view(), &context_y) {
            Ok(v) => v,
            Err(e) => return fail(record, e),
        };
        record.rounds.push(RoundRecord {
            n_labeled: context_y.len(),
            kappa,
            auc,
            queried: Vec::new(),
            acquisition_evaluations: 0,
            seconds: watch.seconds(),
        });
    }

    let initial_pool = unlabeled.len() as f64;
    let mut queried = 0usize;
    let mut round = 0u64;
    let mut counting = Counting::new(predictor);
    while context_y.len() < cfg.budget
        && !remaining.is_empty()
        && (queried as f64) < cfg.stop_fraction * initial_pool
    {
        round += 1;
        let watch = Stopwatch::start();
        let b = cfg
            .batch_size
            .min(cfg.budget - context_y.len())
            .min(remaining.len());
        let pool_x = gather(&pool_z, &remaining);
        counting.reset();
        let input = SelectionInput {
            context_x: context_x.view(),
            context_y: &context_y,
            n_classes: k,
            pool_x: pool_x.view(),
        };
        let round_seed = seed::derive(seeds.acquisition, "round", round);
        let batch = match select_batch(acquisition, &mut counting, &input, b, round_seed) {
            Ok(batch) => batch,
            Err(e) => return fail(record, e),
        };
        let evaluations = counting.rows();

        let mut picked = batch.into_indices();
        let mut check = picked.clone();
        check.sort_unstable();
        check.dedup();
        assert!(
            check.len() == picked.len() && picked.len() == b && check.last().is_none_or(|&m| m < remaining.len()),
            "acquisition returned an invalid batch"
        );
        let rows: Vec<usize> = picked.iter().map(|&pos| unlabeled[remaining[pos]]).collect();
        let mut grown = Array2::zeros((context_x.nrows() + picked.len(), context_x.ncols()));
        grown
            .slice_mut(ndarray::s![..context_x.nrows(), ..])
            .assign(&context_x);
        for (j, &pos) in picked.iter().enumerate() {
            grown
                .row_mut(context_x.nrows() + j)
                .assign(&pool_z.row(remaining[pos]));
        }
        context_x = grown;
        context_y.extend(rows.iter().map(|&r| ds.labels()[r]));
        picked.sort_unstable_by(|a, b| b.cmp(a));
        for pos in picked {
            remaining.remove(pos);
        }
        queried += rows.len();

        let (kappa, auc) = match evaluator.evaluate(&mut counting, context_x.view(), &context_y) {
            Ok(v) => v,
            Err(e) => return fail(record, e),
        };
        record.rounds.push(RoundRecord {
            n_labeled: context_y.len(),
            kappa,
            auc,
            queried: rows,
            acquisition_evaluations: evaluations,
            seconds: watch.seconds(),
        });
    }
    record.complete = true;
    Ok(record)
}
