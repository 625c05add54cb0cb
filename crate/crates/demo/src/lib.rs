//! Browser front end for watching acquisition strategies pick points from a
//! two-class pool in the plane.
//!
//! [`Session`] holds all state and is plain Rust; [`Demo`] is the thin
//! `wasm_bindgen` wrapper the page talks to.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use tabal::acquisition::{AcquisitionConfig, Strategy};
use tabal::active_loop::{run_active_loop, LoopConfig, RunRecord, RunSeeds};
use tabal::data::{stratified_split, two_gaussians, Cell, Dataset, SplitResult};
use tabal::predictor::{neighbor_predict, NeighborConfig, NeighborPredictor};
use tabal::preprocess::{fit_preprocessor, PreprocessorModel};
use tabal::seed;
use tabal::{Error, Result};

const TEST_FRACTION: f64 = 0.3;

/// Per-cell quantity drawn by [`Session::field`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// `1 - (p_top - p_second)`: 1 on the decision boundary.
    Margin,
    /// Entropy divided by `ln K`.
    Entropy,
    /// Probability of the second class.
    Probability,
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "margin" => Ok(Measure::Margin),
            "entropy" => Ok(Measure::Entropy),
            "probability" => Ok(Measure::Probability),
            _ => Err(Error::InvalidArgument(format!("unknown measure {s:?}"))),
        }
    }
}

#[derive(Debug, Serialize)]
struct PoolView<'a> {
    x: Vec<f64>,
    y: Vec<f64>,
    labels: &'a [usize],
    test: Vec<bool>,
    bounds: [f64; 4],
}

#[derive(Debug, Serialize)]
struct RunView<'a> {
    record: &'a RunRecord,
    aulc: Option<f64>,
}

pub struct Session {
    dataset: Dataset,
    split: SplitResult,
    coords: Vec<[f64; 2]>,
    model: PreprocessorModel,
    bounds: [f64; 4],
    last: Option<RunRecord>,
}

fn coord(cell: &Cell) -> f64 {
    match cell {
        Cell::Number(v) => *v,
        _ => f64::NAN,
    }
}

impl Session {
    pub fn new(n: usize, separation: f64, seed: u64) -> Result<Session> {
        if n < 8 {
            return Err(Error::InvalidArgument("the pool needs at least 8 points".into()));
        }
        let dataset = two_gaussians(n, separation, 2, seed);
        let split = stratified_split(&dataset, TEST_FRACTION, seed::derive(seed, "split", 0))?;
        let model = fit_preprocessor(&dataset, &split.pool_indices)?;
        let coords: Vec<[f64; 2]> = dataset.rows().iter().map(|r| [coord(&r[0]), coord(&r[1])]).collect();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for [x, y] in &coords {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
        let pad_x = 0.05 * (x1 - x0).max(1e-9);
        let pad_y = 0.05 * (y1 - y0).max(1e-9);
        Ok(Session {
            dataset,
            split,
            coords,
            model,
            bounds: [x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y],
            last: None,
        })
    }

    /// `[x_min, x_max, y_min, y_max]` of the plotted area.
    pub fn bounds(&self) -> [f64; 4] {
        self.bounds
    }

    pub fn pool_json(&self) -> String {
        let mut test = vec![false; self.coords.len()];
        for &i in &self.split.test_indices {
            test[i] = true;
        }
        let view = PoolView {
            x: self.coords.iter().map(|c| c[0]).collect(),
            y: self.coords.iter().map(|c| c[1]).collect(),
            labels: self.dataset.labels(),
            test,
            bounds: self.bounds,
        };
        serde_json::to_string(&view).expect("pool view serializes")
    }

    pub fn run(&mut self, strategy: Strategy, batch_size: usize, budget: usize, seed: u64) -> Result<&RunRecord> {
        let cfg = LoopConfig {
            budget,
            batch_size,
            ..LoopConfig::default()
        };
        let seeds = RunSeeds {
            init: seed::derive(seed, "init", 0),
            acquisition: seed::derive(seed, "acquisition", 0),
        };
        let mut predictor = NeighborPredictor::default();
        let record = run_active_loop(
            &self.dataset,
            &self.split,
            &AcquisitionConfig::new(strategy),
            &mut predictor,
            &cfg,
            seeds,
        )?;
        if let Some(e) = &record.error {
            return Err(Error::Protocol(e.clone()));
        }
        Ok(self.last.insert(record))
    }

    pub fn run_json(&self) -> Option<String> {
        self.last.as_ref().map(|record| {
            let view = RunView {
                record,
                aulc: record.aulc().ok(),
            };
            serde_json::to_string(&view).expect("run view serializes")
        })
    }

    /// Rows labeled after `round` rounds of the last run.
    pub fn context_at(&self, round: usize) -> Result<Vec<usize>> {
        let record = self
            .last
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("no run yet".into()))?;
        let mut rows = record.initial_context.clone();
        for r in record.rounds.iter().take(round + 1) {
            rows.extend_from_slice(&r.queried);
        }
        Ok(rows)
    }

    /// `measure` on a `resolution x resolution` grid over [`Session::bounds`],
    /// row-major with the first row at `y_max` (screen order).
    pub fn field(&self, round: usize, measure: Measure, resolution: usize) -> Result<Vec<f64>> {
        if resolution == 0 {
            return Err(Error::InvalidArgument("resolution must be >= 1".into()));
        }
        let context = self.context_at(round)?;
        let cx = self.model.transform_rows(&self.dataset, &context)?;
        let cy: Vec<usize> = context.iter().map(|&i| self.dataset.labels()[i]).collect();
        let [x0, x1, y0, y1] = self.bounds;
        let step = |lo: f64, hi: f64, i: usize| lo + (i as f64 + 0.5) / resolution as f64 * (hi - lo);
        let grid: Vec<Vec<Cell>> = (0..resolution * resolution)
            .map(|k| {
                let (row, col) = (k / resolution, k % resolution);
                vec![Cell::Number(step(x0, x1, col)), Cell::Number(step(y1, y0, row))]
            })
            .collect();
        let gz = self.model.transform(&grid)?;
        let k = self.dataset.n_classes();
        let p = neighbor_predict(cx.view(), &cy, gz.view(), k, &NeighborConfig::default())?;
        Ok(p.values()
            .rows()
            .into_iter()
            .map(|r| match measure {
                Measure::Margin => {
                    let mut v = r.to_vec();
                    v.sort_by(|a, b| b.total_cmp(a));
                    1.0 - (v[0] - v[1])
                }
                Measure::Entropy => {
                    -r.iter().map(|&q| if q > 0.0 { q * q.ln() } else { 0.0 }).sum::<f64>() / (k as f64).ln()
                }
                Measure::Probability => r[1],
            })
            .collect())
    }
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    session: Session,
}

#[wasm_bindgen]
impl Demo {
    /// A new pool of `n` points; means `separation` apart on the x axis.
    #[wasm_bindgen(constructor)]
    pub fn new(n: u32, separation: f64, seed: u32) -> std::result::Result<Demo, JsError> {
        Session::new(n as usize, separation, seed as u64)
            .map(|session| Demo { session })
            .map_err(js_err)
    }

    /// JSON `{x, y, labels, test, bounds}`.
    pub fn pool(&self) -> String {
        self.session.pool_json()
    }

    /// Run a strategy from a fresh context; returns JSON `{record, aulc}`.
    pub fn run(&mut self, strategy: &str, batch_size: u32, budget: u32, seed: u32) -> std::result::Result<String, JsError> {
        let strategy: Strategy = strategy.parse().map_err(js_err)?;
        self.session
            .run(strategy, batch_size as usize, budget as usize, seed as u64)
            .map_err(js_err)?;
        Ok(self.session.run_json().expect("run just stored"))
    }

    /// Row-major grid of `measure` ("margin", "entropy" or "probability")
    /// for the context after `round` rounds of the last run.
    pub fn field(&self, round: u32, measure: &str, resolution: u32) -> std::result::Result<Vec<f64>, JsError> {
        let measure: Measure = measure.parse().map_err(js_err)?;
        self.session
            .field(round as usize, measure, resolution as usize)
            .map_err(js_err)
    }

    pub fn bounds(&self) -> Vec<f64> {
        self.session.bounds().to_vec()
    }
}
