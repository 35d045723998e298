//! Threshold-dependent and threshold-free evaluation metrics.
//!
//! Scores are canonically oriented so that larger means more anomalous, and a
//! sample is flagged when `score > tau`. Labels are `true` for anomalies.

mod ranking;
mod scorefile;
mod threshold;

use serde::{Deserialize, Serialize};

use crate::error::MetricsError;

pub use ranking::{
    aupr, auroc, average_precision_from_curve, pr_auc_trapezoidal, pr_curve, roc_curve, CurvePoint,
};
pub use scorefile::{read_score_file, write_score_file, ScoreFile, ScoreRow};
pub use threshold::{optimal_threshold, percentile_threshold, prf1};

/// Which way a detector's raw scores point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    HighIsAnomalous,
    LowIsAnomalous,
}

impl Orientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::HighIsAnomalous => "high_is_anomalous",
            Orientation::LowIsAnomalous => "low_is_anomalous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "high_is_anomalous" => Some(Orientation::HighIsAnomalous),
            "low_is_anomalous" => Some(Orientation::LowIsAnomalous),
            _ => None,
        }
    }
}

/// The class precision, recall and F1 are computed for.
///
/// `Minority` is the anomaly label, which ingestion maps to the minority
/// class. `Majority` inverts both the prediction and the label polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveClass {
    #[default]
    Minority,
    Majority,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdPolicy {
    /// Flag the top `rho` fraction, `rho` being the test anomaly ratio.
    Percentile,
    /// Pick the threshold that maximises F1.
    #[default]
    OptimalF1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// May be infinite: `-inf` flags everything, `+inf` flags nothing.
    #[serde(with = "extended_f64")]
    pub value: f64,
    pub policy: ThresholdPolicy,
    pub percentile_level: Option<f64>,
}

/// JSON has no infinities, so they travel as the strings `"inf"` and
/// `"-inf"`.
pub(crate) mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Named(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        match *v {
            f64::INFINITY => s.serialize_str("inf"),
            f64::NEG_INFINITY => s.serialize_str("-inf"),
            v => s.serialize_f64(v),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Finite(v) => Ok(v),
            Repr::Named(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("expected a number, \"inf\" or \"-inf\", got {other:?}"))),
            },
        }
    }
}

/// Test-set scores with aligned labels, oriented high-is-anomalous.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    scores: Vec<f64>,
    labels: Vec<bool>,
    detector_name: String,
    orientation_flipped: bool,
}

impl ScoreSet {
    pub fn new(detector_name: &str, scores: Vec<f64>, labels: Vec<bool>) -> Result<Self, MetricsError> {
        Self::with_orientation(detector_name, scores, labels, Orientation::HighIsAnomalous)
    }

    /// Normalises `LowIsAnomalous` scores by negation.
    pub fn with_orientation(
        detector_name: &str,
        mut scores: Vec<f64>,
        labels: Vec<bool>,
        orientation: Orientation,
    ) -> Result<Self, MetricsError> {
        if scores.is_empty() {
            return Err(MetricsError::Empty);
        }
        if scores.len() != labels.len() {
            return Err(MetricsError::LengthMismatch {
                scores: scores.len(),
                labels: labels.len(),
            });
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(MetricsError::NonFinite(i));
        }
        let flipped = orientation == Orientation::LowIsAnomalous;
        if flipped {
            scores.iter_mut().for_each(|s| *s = -*s);
        }
        Ok(Self {
            scores,
            labels,
            detector_name: detector_name.to_string(),
            orientation_flipped: flipped,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
    pub fn labels(&self) -> &[bool] {
        &self.labels
    }
    pub fn detector_name(&self) -> &str {
        &self.detector_name
    }
    pub fn orientation_flipped(&self) -> bool {
        self.orientation_flipped
    }
    pub fn len(&self) -> usize {
        self.scores.len()
    }
    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
    pub fn anomaly_ratio(&self) -> f64 {
        self.n_positive() as f64 / self.len() as f64
    }

    pub(crate) fn require_both_classes(&self) -> Result<(usize, usize), MetricsError> {
        let p = self.n_positive();
        let n = self.len() - p;
        if p == 0 || n == 0 {
            return Err(MetricsError::SingleClass);
        }
        Ok((p, n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
    /// `2 TP / (2 TP + FP + FN)`, i.e. the harmonic mean of precision and
    /// recall, 0 when undefined.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.tp + self.fp + self.tn + self.fn_)
    }
    /// The same predictions scored with the other class as positive.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }
}

/// A threshold strictly between `upper` and `lower` (adjacent distinct
/// scores), falling back to `lower` when no float lies strictly between.
pub(crate) fn midpoint(upper: f64, lower: f64) -> f64 {
    let mid = upper / 2.0 + lower / 2.0;
    if mid < upper && mid >= lower {
        mid
    } else {
        lower
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision/recall/F1 at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
    pub positive_class: PositiveClass,
}

impl ThresholdMetrics {
    pub fn from_confusion(confusion: Confusion, positive_class: PositiveClass) -> Self {
        let precision = confusion.precision();
        let recall = confusion.recall();
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
            confusion,
            positive_class,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auroc: f64,
    pub aupr: f64,
    pub threshold: Threshold,
    pub positive_class: PositiveClass,
    pub confusion: Confusion,
}

/// Thresholds the scores with `policy` and computes every metric.
///
/// The percentile policy uses the anomaly ratio of the scored set itself.
pub fn evaluate(
    scores: &ScoreSet,
    policy: ThresholdPolicy,
    positive_class: PositiveClass,
) -> Result<MetricsReport, MetricsError> {
    scores.require_both_classes()?;
    let threshold = match policy {
        ThresholdPolicy::Percentile => percentile_threshold(scores, scores.anomaly_ratio())?,
        ThresholdPolicy::OptimalF1 => optimal_threshold(scores)?,
    };
    let m = prf1(scores, &threshold, positive_class);
    Ok(MetricsReport {
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        auroc: auroc(scores)?,
        aupr: aupr(scores)?,
        threshold,
        positive_class,
        confusion: m.confusion,
    })
}
