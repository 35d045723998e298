use std::collections::{BTreeMap, BTreeSet};

use log::warn;

use crate::error::DataError;

/// Canonical spelling of a class token: surrounding whitespace removed and
/// integral numbers written without a fractional part, so `"3"`, `" 3 "` and
/// `"3.0"` name the same class.
pub fn normalize_class(raw: &str) -> String {
    let t = raw.trim();
    if let Ok(v) = t.parse::<f64>() {
        if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
            return format!("{}", v as i64);
        }
    }
    t.to_string()
}

/// Binary labels produced from a raw class column.
#[derive(Debug, Clone)]
pub struct PositiveClassMapping {
    pub labels: Vec<bool>,
    pub positive_ratio: f64,
    /// Set when the anomaly classes are not the minority.
    pub majority_warning: bool,
}

/// Marks a sample as anomalous (`true`) iff its class is in `anomaly_classes`.
///
/// A positive ratio above one half is kept as-is but logged, since the
/// protocol expects the positive class to be the minority.
pub fn map_positive_class<S: AsRef<str>>(
    raw: &[S],
    anomaly_classes: &[S],
) -> Result<PositiveClassMapping, DataError> {
    if anomaly_classes.is_empty() {
        return Err(DataError::NoAnomalyClasses);
    }
    let observed: BTreeSet<String> = raw.iter().map(|c| normalize_class(c.as_ref())).collect();
    let wanted: BTreeSet<String> = anomaly_classes
        .iter()
        .map(|c| normalize_class(c.as_ref()))
        .collect();
    if let Some(missing) = wanted.iter().find(|c| !observed.contains(*c)) {
        return Err(DataError::UnobservedClass(missing.clone()));
    }
    if observed.is_subset(&wanted) {
        return Err(DataError::AllClassesAnomalous);
    }

    let labels: Vec<bool> = raw
        .iter()
        .map(|c| wanted.contains(&normalize_class(c.as_ref())))
        .collect();
    let positives = labels.iter().filter(|&&l| l).count();
    let positive_ratio = positives as f64 / labels.len() as f64;
    let majority_warning = positive_ratio > 0.5;
    if majority_warning {
        warn!("anomaly classes form the majority (ratio {positive_ratio:.4}); keeping as declared");
    }
    Ok(PositiveClassMapping {
        labels,
        positive_ratio,
        majority_warning,
    })
}

pub(crate) fn class_counts<S: AsRef<str>>(raw: &[S]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for c in raw {
        *counts.entry(normalize_class(c.as_ref())).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrhythmia_classes_collapse_to_positive() {
        let raw: Vec<String> = (1..=16).map(|c| c.to_string()).collect();
        let anomalies: Vec<String> = ["3", "4", "5", "7", "8", "9", "14", "15"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let m = map_positive_class(&raw, &anomalies).unwrap();
        let positive: Vec<usize> = m
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l)
            .map(|(i, _)| i + 1)
            .collect();
        assert_eq!(positive, vec![3, 4, 5, 7, 8, 9, 14, 15]);
    }

    #[test]
    fn thyroid_hyperfunction_only() {
        let raw = ["normal", "subnormal", "hyperfunction", "normal", "normal"];
        let m = map_positive_class(&raw, &["hyperfunction"]).unwrap();
        assert_eq!(m.labels, vec![false, false, true, false, false]);
        assert!((m.positive_ratio - 0.2).abs() < 1e-12);
        assert!(!m.majority_warning);
    }

    #[test]
    fn numeric_spellings_match() {
        let raw = ["1.0", "0", " 1", "0.0"];
        let m = map_positive_class(&raw, &["1"]).unwrap();
        assert_eq!(m.labels, vec![true, false, true, false]);
    }

    #[test]
    fn single_observed_class_is_rejected() {
        let raw = ["a", "a", "a"];
        assert!(matches!(
            map_positive_class(&raw, &["a"]),
            Err(DataError::AllClassesAnomalous)
        ));
    }

    #[test]
    fn unknown_class_is_rejected() {
        let raw = ["a", "b"];
        assert!(matches!(
            map_positive_class(&raw, &["c"]),
            Err(DataError::UnobservedClass(_))
        ));
        let empty: [&str; 0] = [];
        assert!(matches!(
            map_positive_class(&raw, &empty),
            Err(DataError::NoAnomalyClasses)
        ));
    }

    #[test]
    fn majority_positive_is_kept_with_warning() {
        let raw = ["x", "x", "x", "y"];
        let m = map_positive_class(&raw, &["x"]).unwrap();
        assert!(m.majority_warning);
        assert!((m.positive_ratio - 0.75).abs() < 1e-12);
    }
}
