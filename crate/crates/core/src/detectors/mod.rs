//! Natively implemented detectors.
//!
//! Detectors only ever see feature rows. Labels stay with the engine, which
//! hands a detector the training rows for `fit` and the test rows for
//! `score`.

mod blob;
pub mod dae;
pub mod lof;
pub mod nn;

use ndarray::ArrayView2;

use crate::error::DetectorError;

pub use dae::{DaeConfig, DaeModel, EarlyStopping, Precision};
pub use lof::{LofConfig, LofModel};

/// A fitted model. Scores are oriented high-is-anomalous.
pub trait Model: Send + Sync {
    fn score(&self, test: ArrayView2<'_, f64>) -> Result<Vec<f64>, DetectorError>;

    fn final_loss(&self) -> Option<f64> {
        None
    }

    fn to_bytes(&self) -> Vec<u8>;
}

pub trait Detector: Send + Sync {
    fn name(&self) -> String;

    fn fit(&self, train: ArrayView2<'_, f64>, seed: u64) -> Result<Box<dyn Model>, DetectorError>;
}
