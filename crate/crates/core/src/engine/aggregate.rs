//! Mean and sample standard deviation of metrics across runs.

use serde::{Deserialize, Serialize};

use crate::metrics::MetricsReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    F1,
    Auroc,
    Aupr,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Precision, Metric::Recall, Metric::F1, Metric::Auroc, Metric::Aupr];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
            Metric::Auroc => "auroc",
            Metric::Aupr => "aupr",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Metric::Precision => "Precision",
            Metric::Recall => "Recall",
            Metric::F1 => "F1",
            Metric::Auroc => "AUROC",
            Metric::Aupr => "AUPR",
        }
    }

    pub fn of(&self, r: &MetricsReport) -> f64 {
        match self {
            Metric::Precision => r.precision,
            Metric::Recall => r.recall,
            Metric::F1 => r.f1,
            Metric::Auroc => r.auroc,
            Metric::Aupr => r.aupr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample (n - 1) standard deviation; 0 for a single run.
    pub std: f64,
}

impl MeanStd {
    /// Welford's update, so identical inputs give a standard deviation of
    /// exactly zero.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
        for x in values {
            n += 1;
            let delta = x - mean;
            mean += delta / n as f64;
            m2 += delta * (x - mean);
        }
        let std = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub n_runs: usize,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub auroc: MeanStd,
    pub aupr: MeanStd,
    pub reports: Vec<MetricsReport>,
}

impl RunAggregate {
    pub fn from_reports(reports: Vec<MetricsReport>) -> Self {
        let stat = |m: Metric| MeanStd::of(reports.iter().map(|r| m.of(r)));
        Self {
            n_runs: reports.len(),
            precision: stat(Metric::Precision),
            recall: stat(Metric::Recall),
            f1: stat(Metric::F1),
            auroc: stat(Metric::Auroc),
            aupr: stat(Metric::Aupr),
            reports,
        }
    }

    pub fn get(&self, metric: Metric) -> MeanStd {
        match metric {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
            Metric::Auroc => self.auroc,
            Metric::Aupr => self.aupr,
        }
    }
}
