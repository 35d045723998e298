//! Experiments that measure how evaluation choices move the numbers:
//! the split strategy, the class treated as positive, and the anomaly ratio
//! of the test set.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::detectors::Detector;
use crate::error::{MetricsError, Result};
use crate::metrics::{
    aupr, auroc, optimal_threshold, percentile_threshold, prf1, PositiveClass, ScoreSet, Threshold, ThresholdMetrics,
};
use crate::rng::SplitMix64;
use crate::split::{self, SplitSpec, SplitStrategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitBiasRow {
    pub strategy: SplitStrategy,
    pub train_size: usize,
    pub test_normals: usize,
    pub test_anomalies: usize,
    pub test_anomaly_ratio: f64,
    pub f1_optimal: f64,
    pub f1_percentile: f64,
    /// F1 at the optimal threshold found under the proposed split.
    pub f1_fixed_threshold: f64,
    pub aupr: f64,
    pub auroc: f64,
    pub delta_f1_optimal: f64,
    pub delta_f1_fixed_threshold: f64,
    pub delta_aupr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitBiasAudit {
    pub seed: u64,
    #[serde(with = "crate::metrics::extended_f64")]
    pub fixed_threshold: f64,
    pub rows: Vec<SplitBiasRow>,
    pub notes: Vec<String>,
}

/// Fits the detector under the proposed, recycling and discarding splits
/// with the same seed and compares the test-set metrics. Deltas are taken
/// against the proposed split.
pub fn audit_split_bias(ds: &TabularDataset, detector: &dyn Detector, seed: u64) -> Result<SplitBiasAudit> {
    let strategies = [SplitStrategy::Proposed, SplitStrategy::Recycling, SplitStrategy::Discarding];
    let mut scored = Vec::new();
    for strategy in strategies {
        let s = split::split(ds, &SplitSpec::new(strategy, seed))?;
        let model = detector.fit(ds.rows(&s.train_indices).view(), seed)?;
        let raw = model.score(ds.rows(&s.test_indices).view())?;
        let set = ScoreSet::new(&detector.name(), raw, ds.labels_at(&s.test_indices))?;
        scored.push((strategy, s, set));
    }
    let fixed = optimal_threshold(&scored[0].2)?;

    let mut rows: Vec<SplitBiasRow> = Vec::new();
    for (strategy, s, set) in &scored {
        let opt = prf1(set, &optimal_threshold(set)?, PositiveClass::Minority);
        let pct = prf1(set, &percentile_threshold(set, set.anomaly_ratio())?, PositiveClass::Minority);
        let at_fixed = prf1(set, &fixed, PositiveClass::Minority);
        rows.push(SplitBiasRow {
            strategy: *strategy,
            train_size: s.train_indices.len(),
            test_normals: s.counts.test_normals,
            test_anomalies: s.counts.test_anomalies,
            test_anomaly_ratio: s.counts.test_anomaly_ratio(),
            f1_optimal: opt.f1,
            f1_percentile: pct.f1,
            f1_fixed_threshold: at_fixed.f1,
            aupr: aupr(set)?,
            auroc: auroc(set)?,
            delta_f1_optimal: 0.0,
            delta_f1_fixed_threshold: 0.0,
            delta_aupr: 0.0,
        });
    }
    let base = rows[0].clone();
    for r in &mut rows {
        r.delta_f1_optimal = r.f1_optimal - base.f1_optimal;
        r.delta_f1_fixed_threshold = r.f1_fixed_threshold - base.f1_fixed_threshold;
        r.delta_aupr = r.aupr - base.aupr;
    }
    Ok(SplitBiasAudit {
        seed,
        fixed_threshold: fixed.value,
        rows,
        notes: vec![
            "discarding: anomalies that fall in the training half are dropped, not moved to the test half".into(),
            "each strategy fits its own model with the same detector seed".into(),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSwapReport {
    pub threshold: Threshold,
    pub minority: ThresholdMetrics,
    pub majority: ThresholdMetrics,
    pub accuracy: f64,
    pub anomaly_ratio: f64,
    /// `majority.f1 - minority.f1`.
    pub gap: f64,
    pub accuracy_exceeds_ratio: bool,
    pub majority_at_least_minority: bool,
}

/// F1 of one set of predictions with either class as the positive one.
pub fn audit_class_swap(scores: &ScoreSet, threshold: &Threshold) -> ClassSwapReport {
    let minority = prf1(scores, threshold, PositiveClass::Minority);
    let majority = prf1(scores, threshold, PositiveClass::Majority);
    let accuracy = minority.confusion.accuracy();
    let rho = scores.anomaly_ratio();
    let report = ClassSwapReport {
        threshold: *threshold,
        minority,
        majority,
        accuracy,
        anomaly_ratio: rho,
        gap: majority.f1 - minority.f1,
        accuracy_exceeds_ratio: accuracy > rho,
        majority_at_least_minority: majority.f1 >= minority.f1,
    };
    if report.accuracy_exceeds_ratio && !report.majority_at_least_minority {
        warn!(
            "class swap: accuracy {:.4} exceeds rho {:.4} but majority F1 {:.4} < minority F1 {:.4}",
            accuracy, rho, majority.f1, minority.f1
        );
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub factor: f64,
    pub n_positive: usize,
    pub n_negative: usize,
    pub anomaly_ratio: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auroc: f64,
    pub delta_f1: f64,
    pub delta_auroc: f64,
}

/// Resamples the positives by `factor`: each is repeated `floor(factor)`
/// times and a seeded random `round(frac(factor) * P)` of them once more.
/// `factor < 1` therefore subsamples.
pub fn resample_positives(scores: &ScoreSet, factor: f64, seed: u64) -> Result<ScoreSet> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(MetricsError::BadRatio(factor).into());
    }
    let positives: Vec<f64> = scores
        .scores()
        .iter()
        .zip(scores.labels())
        .filter(|(_, &l)| l)
        .map(|(&s, _)| s)
        .collect();
    let whole = factor.floor() as usize;
    let extra = ((factor - whole as f64) * positives.len() as f64).round() as usize;

    let mut out_scores: Vec<f64> = Vec::new();
    let mut out_labels: Vec<bool> = Vec::new();
    for (&s, &l) in scores.scores().iter().zip(scores.labels()) {
        let copies = if l { whole } else { 1 };
        for _ in 0..copies {
            out_scores.push(s);
            out_labels.push(l);
        }
    }
    let mut order: Vec<usize> = (0..positives.len()).collect();
    SplitMix64::new(seed).partial_shuffle(&mut order, extra);
    for &i in &order[..extra] {
        out_scores.push(positives[i]);
        out_labels.push(true);
    }
    Ok(ScoreSet::new(scores.detector_name(), out_scores, out_labels)?)
}

/// F1 at a fixed threshold while the positive count is scaled by each
/// factor, with AUROC alongside as the ratio-insensitive control.
pub fn audit_ratio_manipulation(
    scores: &ScoreSet,
    threshold: &Threshold,
    factors: &[f64],
    seed: u64,
) -> Result<Vec<RatioRow>> {
    let base_f1 = prf1(scores, threshold, PositiveClass::Minority).f1;
    let base_auroc = auroc(scores)?;
    factors
        .iter()
        .map(|&factor| {
            let set = resample_positives(scores, factor, seed)?;
            let m = prf1(&set, threshold, PositiveClass::Minority);
            let a = auroc(&set)?;
            let p = set.n_positive();
            Ok(RatioRow {
                factor,
                n_positive: p,
                n_negative: set.len() - p,
                anomaly_ratio: set.anomaly_ratio(),
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
                auroc: a,
                delta_f1: m.f1 - base_f1,
                delta_auroc: a - base_auroc,
            })
        })
        .collect()
}
