//! Pool-based active learning for tabular classification, with a benchmark
//! harness for comparing acquisition strategies across datasets and seeds.

pub mod acquisition;
pub mod active_loop;
pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod predictor;
pub mod preprocess;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
