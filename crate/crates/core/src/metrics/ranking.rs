//! Threshold-free ranking metrics and the curves behind them.

use serde::{Deserialize, Serialize};

use super::{midpoint, ScoreSet};
use crate::error::MetricsError;

/// One operating point of a PR or ROC sweep.
///
/// For PR curves `x` is recall and `y` precision; for ROC curves `x` is the
/// false positive rate and `y` the true positive rate. `threshold` is the
/// `tau` that realises the point under the `score > tau` rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub threshold: f64,
}

/// Cumulative (tp, fp) after each block of tied scores, highest first, along
/// with the threshold just below the block.
fn sweep(scores: &ScoreSet) -> Vec<(usize, usize, f64)> {
    let s = scores.scores();
    let labels = scores.labels();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_unstable_by(|&a, &b| s[b].total_cmp(&s[a]));
    let mut out = Vec::new();
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
        out.push((tp, fp, tau));
    }
    out
}

/// Area under the ROC curve as the Mann-Whitney statistic with midranks:
/// `P(score(anomaly) > score(normal)) + P(equal) / 2`.
pub fn auroc(scores: &ScoreSet) -> Result<f64, MetricsError> {
    let (n_pos, n_neg) = scores.require_both_classes()?;
    let s = scores.scores();
    let labels = scores.labels();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_unstable_by(|&a, &b| s[a].total_cmp(&s[b]));

    let mut rank_sum = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && s[order[j]] == s[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j share the average (i + 1 + j) / 2.
        let midrank = (i + 1 + j) as f64 / 2.0;
        let pos_in_block = order[i..j].iter().filter(|&&k| labels[k]).count();
        rank_sum += midrank * pos_in_block as f64;
        i = j;
    }
    let u = rank_sum - (n_pos as f64) * (n_pos as f64 + 1.0) / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Average precision: `sum_n (R_n - R_{n-1}) * P_n` over a descending sweep,
/// tied scores entering as one block.
pub fn aupr(scores: &ScoreSet) -> Result<f64, MetricsError> {
    let (n_pos, _) = scores.require_both_classes()?;
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (tp, fp, _) in sweep(scores) {
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// Precision-recall points from `tau = +inf` (recall 0, precision 1 by
/// convention) down to `tau = -inf` (recall 1, precision = anomaly ratio).
pub fn pr_curve(scores: &ScoreSet) -> Result<Vec<CurvePoint>, MetricsError> {
    let (n_pos, _) = scores.require_both_classes()?;
    let mut points = vec![CurvePoint {
        x: 0.0,
        y: 1.0,
        threshold: f64::INFINITY,
    }];
    for (tp, fp, tau) in sweep(scores) {
        points.push(CurvePoint {
            x: tp as f64 / n_pos as f64,
            y: tp as f64 / (tp + fp) as f64,
            threshold: tau,
        });
    }
    Ok(points)
}

pub fn roc_curve(scores: &ScoreSet) -> Result<Vec<CurvePoint>, MetricsError> {
    let (n_pos, n_neg) = scores.require_both_classes()?;
    let mut points = vec![CurvePoint {
        x: 0.0,
        y: 0.0,
        threshold: f64::INFINITY,
    }];
    for (tp, fp, tau) in sweep(scores) {
        points.push(CurvePoint {
            x: fp as f64 / n_neg as f64,
            y: tp as f64 / n_pos as f64,
            threshold: tau,
        });
    }
    Ok(points)
}

/// Step-wise integral of a PR curve, the same rule `aupr` applies.
pub fn average_precision_from_curve(points: &[CurvePoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].x - w[0].x) * w[1].y)
        .sum()
}

/// Trapezoidal PR area, kept for comparison with average precision.
pub fn pr_auc_trapezoidal(scores: &ScoreSet) -> Result<f64, MetricsError> {
    let points = pr_curve(scores)?;
    Ok(points
        .windows(2)
        .map(|w| (w[1].x - w[0].x) * (w[1].y + w[0].y) / 2.0)
        .sum())
}
