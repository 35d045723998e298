use std::cmp::Ordering;

use super::{midpoint, Confusion, PositiveClass, ScoreSet, Threshold, ThresholdMetrics, ThresholdPolicy};
use crate::error::MetricsError;

/// Nearest-rank `(1 - rho)` percentile: the `k`-th smallest score with
/// `k = ceil((1 - rho) * n)`. Flagging `score > tau` then marks the top
/// `rho` fraction when scores are distinct.
pub fn percentile_threshold(scores: &ScoreSet, rho: f64) -> Result<Threshold, MetricsError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(MetricsError::BadRatio(rho));
    }
    if scores.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = scores.len();
    let level = 1.0 - rho;
    // The epsilon absorbs representation error in products such as 0.9 * 10.
    let k = ((level * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut sorted = scores.scores().to_vec();
    let (_, kth, _) = sorted.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    Ok(Threshold {
        value: *kth,
        policy: ThresholdPolicy::Percentile,
        percentile_level: Some(level),
    })
}

/// Exact fraction, compared by cross-multiplication so that equal F1 values
/// reached from different confusion matrices tie exactly.
#[derive(Clone, Copy)]
struct Fraction {
    num: u128,
    den: u128,
}

impl Fraction {
    fn new(num: usize, den: usize) -> Self {
        if den == 0 {
            Self { num: 0, den: 1 }
        } else {
            Self {
                num: num as u128,
                den: den as u128,
            }
        }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Exhaustive F1-maximising threshold with the anomaly class positive.
///
/// Candidates are `+inf`, the midpoints between consecutive distinct scores,
/// and `-inf`. Ties go to higher precision, then to the smaller threshold.
pub fn optimal_threshold(scores: &ScoreSet) -> Result<Threshold, MetricsError> {
    let (positives, _) = scores.require_both_classes()?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    let s = scores.scores();
    let labels = scores.labels();
    order.sort_unstable_by(|&a, &b| s[b].total_cmp(&s[a]));

    // Start at +inf: nothing flagged.
    let mut best_tau = f64::INFINITY;
    let mut best_f1 = Fraction::new(0, positives);
    let mut best_precision = Fraction::new(0, 0);

    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let value = s[order[i]];
        while i < order.len() && s[order[i]] == value {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let tau = if i < order.len() {
            midpoint(value, s[order[i]])
        } else {
            f64::NEG_INFINITY
        };
        let fn_ = positives - tp;
        let f1 = Fraction::new(2 * tp, 2 * tp + fp + fn_);
        let precision = Fraction::new(tp, tp + fp);
        // Candidates arrive in decreasing tau, so `>=` on a full tie keeps
        // the smaller threshold.
        let better = match f1.cmp(&best_f1) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => precision.cmp(&best_precision) != Ordering::Less,
        };
        if better {
            best_tau = tau;
            best_f1 = f1;
            best_precision = precision;
        }
    }
    Ok(Threshold {
        value: best_tau,
        policy: ThresholdPolicy::OptimalF1,
        percentile_level: None,
    })
}

/// Confusion counts and precision/recall/F1 at `threshold`.
///
/// A sample is predicted anomalous iff `score > tau`. With
/// `PositiveClass::Majority` the normal class becomes the positive one, so
/// both the predictions and the labels change polarity.
pub fn prf1(scores: &ScoreSet, threshold: &Threshold, positive_class: PositiveClass) -> ThresholdMetrics {
    let mut c = Confusion::default();
    for (&s, &l) in scores.scores().iter().zip(scores.labels()) {
        match (s > threshold.value, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let c = match positive_class {
        PositiveClass::Minority => c,
        PositiveClass::Majority => c.swapped(),
    };
    ThresholdMetrics::from_confusion(c, positive_class)
}
