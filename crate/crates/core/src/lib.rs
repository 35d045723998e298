//! Evaluation harness for unsupervised anomaly detection on tabular data.
//!
//! The pipeline is: ingest a CSV into a scaled [`data::TabularDataset`],
//! split it with a [`split::SplitSpec`], fit a detector on the training rows
//! (features only), score the test rows into a [`metrics::ScoreSet`], and
//! threshold and aggregate the results with the [`engine`].

pub mod data;
pub mod detectors;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod split;

pub use error::{Error, ErrorKind, Result};
