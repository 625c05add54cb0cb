//! Acquisition rules: which pool points to label next.
//!
//! All selections return positions into the current pool arrays, ordered by
//! selection. Score ties always break toward the smaller pool position.

mod coreset;
mod diversity;
mod kmeans;
mod scores;

pub use coreset::{select_coreset, CoresetState};
pub use diversity::{
    candidate_count_hybrid, compute_n_proxy, diversify, nearest_unique, select_hybrid,
    select_proxy_hybrid,
};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use scores::{bottom_k_asc, entropy_scores, margin_scores, select_margin, top_k_desc};

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::{LinearConfig, Predictor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Margin,
    Hybrid,
    ProxyHybrid,
    Coreset,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Margin,
        Strategy::Hybrid,
        Strategy::ProxyHybrid,
        Strategy::Coreset,
        Strategy::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Margin => "margin",
            Strategy::Hybrid => "hybrid",
            Strategy::ProxyHybrid => "proxy_hybrid",
            Strategy::Coreset => "coreset",
            Strategy::Random => "random",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s || st.as_str().replace('_', "-") == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionConfig {
    pub strategy: Strategy,
    /// Optional display name; defaults to the strategy name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Fraction of the pool kept by the proxy screen.
    pub filter_ratio: f64,
    pub proxy_min: usize,
    pub proxy_max: usize,
    pub entropy_eps: f64,
    pub kmeans: KMeansConfig,
    pub proxy: LinearConfig,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        AcquisitionConfig {
            strategy: Strategy::Margin,
            name: None,
            filter_ratio: 0.05,
            proxy_min: 200,
            proxy_max: 2000,
            entropy_eps: 1e-12,
            kmeans: KMeansConfig::default(),
            proxy: LinearConfig::default(),
        }
    }
}

impl AcquisitionConfig {
    pub fn new(strategy: Strategy) -> Self {
        AcquisitionConfig {
            strategy,
            ..AcquisitionConfig::default()
        }
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.strategy.as_str().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.filter_ratio > 0.0 && self.filter_ratio <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "filter ratio must lie in (0, 1], got {}",
                self.filter_ratio
            )));
        }
        if self.proxy_min > self.proxy_max {
            return Err(Error::InvalidArgument(format!(
                "proxy_min {} exceeds proxy_max {}",
                self.proxy_min, self.proxy_max
            )));
        }
        if !(self.entropy_eps > 0.0) {
            return Err(Error::InvalidArgument("entropy_eps must be > 0".into()));
        }
        Ok(())
    }
}

/// Pool positions chosen for labeling, in selection order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryBatch(Vec<usize>);

impl QueryBatch {
    pub fn new(indices: Vec<usize>) -> Self {
        QueryBatch(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn into_indices(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Uniform sample without replacement of `min(b, pool_size)` positions.
pub fn select_random(pool_size: usize, b: usize, seed: u64) -> QueryBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    QueryBatch(rand::seq::index::sample(&mut rng, pool_size, b.min(pool_size)).into_vec())
}

/// Everything a strategy may look at when choosing a batch.
pub struct SelectionInput<'a> {
    pub context_x: ArrayView2<'a, f64>,
    pub context_y: &'a [usize],
    pub n_classes: usize,
    pub pool_x: ArrayView2<'a, f64>,
}

/// Run one acquisition step for `cfg.strategy`.
pub fn select_batch<P: Predictor + ?Sized>(
    cfg: &AcquisitionConfig,
    predictor: &mut P,
    input: &SelectionInput<'_>,
    b: usize,
    seed: u64,
) -> Result<QueryBatch> {
    let n_pool = input.pool_x.nrows();
    if n_pool == 0 || b == 0 {
        return Ok(QueryBatch(Vec::new()));
    }
    match cfg.strategy {
        Strategy::Margin => {
            let p = predictor.predict_proba(input.context_x, input.context_y, input.pool_x, input.n_classes)?;
            Ok(select_margin(&p, b))
        }
        Strategy::Hybrid => {
            let p = predictor.predict_proba(input.context_x, input.context_y, input.pool_x, input.n_classes)?;
            Ok(select_hybrid(&p, input.pool_x, b, cfg, seed))
        }
        Strategy::ProxyHybrid => select_proxy_hybrid(
            predictor,
            input.context_x,
            input.context_y,
            input.n_classes,
            input.pool_x,
            b,
            cfg,
            seed,
        ),
        Strategy::Coreset => Ok(select_coreset(input.pool_x, input.context_x, b)),
        Strategy::Random => Ok(select_random(n_pool, b, seed)),
    }
}
