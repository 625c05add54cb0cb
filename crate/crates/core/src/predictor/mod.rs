//! Probabilistic in-context predictors.
//!
//! Every predictor answers one question: given a labeled context and a set of
//! query rows (both already in the preprocessed feature space), what are the
//! class probabilities of each query? Predictors keep no state between calls
//! beyond their configuration, so the context passed per call is the only
//! thing that changes from one active-learning round to the next.

mod external;
mod linear;
mod neighbor;

pub use external::{Endpoint, ExternalConfig, ExternalPredictor, Message, PROTOCOL_VERSION};
pub use linear::{fit_linear, LinearConfig, LinearModel, LinearPredictor, WeightedLogLoss};
pub use neighbor::{neighbor_predict, NeighborConfig, NeighborPredictor};

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of a probability row sum from 1.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Rows of class probabilities in the dataset's canonical class order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix(Array2<f64>);

impl ProbabilityMatrix {
    /// Validate and wrap a matrix. Rows are never renormalized.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        for (i, row) in values.rows().into_iter().enumerate() {
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidProbabilities(format!(
                    "row {i} has entry {v} outside [0, 1]"
                )));
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(Error::InvalidProbabilities(format!(
                    "row {i} sums to {sum}"
                )));
            }
        }
        Ok(ProbabilityMatrix(values))
    }

    pub fn from_rows(rows: &[Vec<f64>], n_classes: usize) -> Result<Self> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_classes) {
            return Err(Error::InvalidProbabilities(format!(
                "row {i} has {} entries, expected {n_classes}",
                r.len()
            )));
        }
        let flat = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), n_classes), flat)
            .map_err(|e| Error::InvalidProbabilities(e.to_string()))?;
        ProbabilityMatrix::new(values)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn n_rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.0.row(i)
    }

    /// Most probable class of row `i`; ties go to the lower class index.
    pub fn argmax(&self, i: usize) -> usize {
        let mut best = 0;
        for (c, &p) in self.0.row(i).iter().enumerate() {
            if p > self.0[[i, best]] {
                best = c;
            }
        }
        best
    }

    pub fn predictions(&self) -> Vec<usize> {
        (0..self.n_rows()).map(|i| self.argmax(i)).collect()
    }
}

/// A probabilistic predictor conditioned on a labeled context at call time.
pub trait Predictor: Send {
    fn name(&self) -> String;

    fn predict_proba(
        &mut self,
        context_x: ArrayView2<'_, f64>,
        context_y: &[usize],
        queries: ArrayView2<'_, f64>,
        n_classes: usize,
    ) -> Result<ProbabilityMatrix>;
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn predict_proba(
        &mut self,
        context_x: ArrayView2<'_, f64>,
        context_y: &[usize],
        queries: ArrayView2<'_, f64>,
        n_classes: usize,
    ) -> Result<ProbabilityMatrix> {
        (**self).predict_proba(context_x, context_y, queries, n_classes)
    }
}

impl<P: Predictor + ?Sized> Predictor for &mut P {
    fn name(&self) -> String {
        (**self).name()
    }

    fn predict_proba(
        &mut self,
        context_x: ArrayView2<'_, f64>,
        context_y: &[usize],
        queries: ArrayView2<'_, f64>,
        n_classes: usize,
    ) -> Result<ProbabilityMatrix> {
        (**self).predict_proba(context_x, context_y, queries, n_classes)
    }
}

pub(crate) fn check_inputs(
    context_x: ArrayView2<'_, f64>,
    context_y: &[usize],
    queries: ArrayView2<'_, f64>,
    n_classes: usize,
) -> Result<()> {
    if context_x.nrows() == 0 {
        return Err(Error::InvalidArgument("empty context".into()));
    }
    if context_x.nrows() != context_y.len() {
        return Err(Error::InvalidArgument(format!(
            "context has {} rows but {} labels",
            context_x.nrows(),
            context_y.len()
        )));
    }
    if queries.nrows() > 0 && queries.ncols() != context_x.ncols() {
        return Err(Error::InvalidArgument(format!(
            "queries have {} features, context has {}",
            queries.ncols(),
            context_x.ncols()
        )));
    }
    if let Some(&y) = context_y.iter().find(|&&y| y >= n_classes) {
        return Err(Error::InvalidArgument(format!(
            "context label {y} out of range for {n_classes} classes"
        )));
    }
    Ok(())
}

/// Serializable predictor configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorSpec {
    Neighbor(NeighborConfig),
    Linear(LinearConfig),
    External(ExternalConfig),
}

impl Default for PredictorSpec {
    fn default() -> Self {
        PredictorSpec::Neighbor(NeighborConfig::default())
    }
}

impl PredictorSpec {
    /// Instantiate the predictor. External predictors connect and handshake here.
    pub fn build(&self) -> Result<Box<dyn Predictor>> {
        Ok(match self {
            PredictorSpec::Neighbor(cfg) => Box::new(NeighborPredictor::new(cfg.clone())),
            PredictorSpec::Linear(cfg) => Box::new(LinearPredictor::new(cfg.clone())),
            PredictorSpec::External(cfg) => Box::new(ExternalPredictor::connect(cfg)?),
        })
    }
}

/// Wraps a predictor and counts the query rows it scores.
pub struct Counting<P> {
    inner: P,
    calls: usize,
    rows: usize,
}

impl<P: Predictor> Counting<P> {
    pub fn new(inner: P) -> Self {
        Counting {
            inner,
            calls: 0,
            rows: 0,
        }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn reset(&mut self) {
        self.calls = 0;
        self.rows = 0;
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: Predictor> Predictor for Counting<P> {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn predict_proba(
        &mut self,
        context_x: ArrayView2<'_, f64>,
        context_y: &[usize],
        queries: ArrayView2<'_, f64>,
        n_classes: usize,
    ) -> Result<ProbabilityMatrix> {
        self.calls += 1;
        self.rows += queries.nrows();
        self.inner
            .predict_proba(context_x, context_y, queries, n_classes)
    }
}
