//! Experiment orchestration: split, fit, score, threshold, aggregate.

mod aggregate;
pub mod audit;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::detectors::{DaeConfig, Detector, LofConfig};
use crate::error::{ConfigError, DetectorError, Error, MetricsError, Result};
use crate::metrics::{evaluate, read_score_file, MetricsReport, PositiveClass, ScoreSet, ThresholdPolicy};
use crate::rng::{derive_seed, SplitMix64};
use crate::split::{self, SplitCounts, SplitSpec};

pub use aggregate::{MeanStd, Metric, RunAggregate};

const DETECTOR_STREAM: u64 = 0x20;
const SUBSAMPLE_STREAM: u64 = 0x21;

/// Placeholder substituted with the run index in external score paths.
pub const RUN_PLACEHOLDER: &str = "{run}";

/// A detector scored outside this process, read back from one score file
/// per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalDetector {
    pub name: String,
    /// Path pattern containing `{run}`, relative to the config file.
    pub scores: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DetectorSpec {
    Lof(LofConfig),
    Dae(DaeConfig),
    External(ExternalDetector),
}

impl DetectorSpec {
    pub fn name(&self) -> String {
        match self {
            DetectorSpec::Lof(c) => c.name(),
            DetectorSpec::Dae(c) => c.name(),
            DetectorSpec::External(e) => e.name.clone(),
        }
    }

    pub fn native(&self) -> Option<&dyn Detector> {
        match self {
            DetectorSpec::Lof(c) => Some(c),
            DetectorSpec::Dae(c) => Some(c),
            DetectorSpec::External(_) => None,
        }
    }
}

fn default_runs() -> usize {
    20
}

fn default_metrics() -> Vec<Metric> {
    Metric::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// A `[dataset.<name>]` section or a catalog name.
    pub dataset: String,
    pub detector: DetectorSpec,
    pub split: SplitSpec,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default)]
    pub threshold: ThresholdPolicy,
    #[serde(default)]
    pub positive_class: PositiveClass,
    /// Columns shown in the rendered tables.
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    /// Evaluate on a seeded uniform subsample of this fraction of the rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<f64>,
    /// Display name in reports and result paths; the detector's name when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ExperimentSpec {
    pub fn new(dataset: &str, detector: DetectorSpec, split: SplitSpec) -> Self {
        Self {
            dataset: dataset.to_string(),
            detector,
            split,
            n_runs: default_runs(),
            threshold: ThresholdPolicy::default(),
            positive_class: PositiveClass::default(),
            metrics: default_metrics(),
            subsample: None,
            label: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(ConfigError::Invalid("n_runs must be at least 1".into()).into());
        }
        if self.metrics.is_empty() {
            return Err(ConfigError::Invalid("metrics must not be empty".into()).into());
        }
        if let Some(f) = self.subsample {
            if !(f > 0.0 && f <= 1.0) {
                return Err(ConfigError::Invalid(format!("subsample must lie in (0, 1], got {f}")).into());
            }
        }
        if let DetectorSpec::External(e) = &self.detector {
            if self.n_runs > 1 && !e.scores.contains(RUN_PLACEHOLDER) {
                return Err(ConfigError::Invalid(format!(
                    "external score path `{}` needs a {RUN_PLACEHOLDER} placeholder for {} runs",
                    e.scores, self.n_runs
                ))
                .into());
            }
        }
        self.split.validate()?;
        Ok(())
    }

    pub fn display_name(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.detector.name())
    }

    /// Seed handed to the detector in run `run`.
    pub fn detector_seed(&self, run: usize) -> u64 {
        derive_seed(derive_seed(self.split.seed, DETECTOR_STREAM), run as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub split_seed: u64,
    pub detector_seed: u64,
    pub counts: SplitCounts,
    pub test_anomaly_ratio: f64,
    pub report: MetricsReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub anomaly_ratio: f64,
    pub rejected_rows: usize,
    /// Scaling statistics come from the full dataset, before any split.
    pub scaling: String,
}

impl DatasetSummary {
    pub fn of(ds: &TabularDataset) -> Self {
        Self {
            name: ds.name().to_string(),
            n_samples: ds.n_samples(),
            n_features: ds.n_features(),
            anomaly_ratio: ds.anomaly_ratio(),
            rejected_rows: ds.provenance().rejected_rows,
            scaling: "min-max over the full dataset before splitting".into(),
        }
    }
}

/// Everything one experiment produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub detector: String,
    pub dataset: DatasetSummary,
    pub spec: ExperimentSpec,
    pub runs: Vec<RunRecord>,
    pub aggregate: RunAggregate,
    /// Per-run test scores, kept in memory for curves and audits.
    #[serde(skip)]
    pub score_sets: Vec<ScoreSet>,
}

/// The seeded row subsample `spec` evaluates on, if it asks for one.
pub fn subsampled(ds: &TabularDataset, spec: &ExperimentSpec) -> Option<TabularDataset> {
    let f = spec.subsample.filter(|&f| f < 1.0)?;
    let n = ds.n_samples();
    let keep = ((f * n as f64).round() as usize).clamp(1, n);
    let mut idx: Vec<usize> = (0..n).collect();
    SplitMix64::new(derive_seed(spec.split.seed, SUBSAMPLE_STREAM)).partial_shuffle(&mut idx, keep);
    idx.truncate(keep);
    idx.sort_unstable();
    info!("subsampled {} of {} rows", keep, n);
    Some(ds.subset(&idx))
}

fn finish(
    name: &str,
    ds: &TabularDataset,
    spec: &ExperimentSpec,
    detector: String,
    outcomes: Vec<(RunRecord, ScoreSet)>,
) -> ExperimentResult {
    let (runs, score_sets): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    let aggregate = RunAggregate::from_reports(runs.iter().map(|r: &RunRecord| r.report).collect());
    ExperimentResult {
        name: name.to_string(),
        detector,
        dataset: DatasetSummary::of(ds),
        spec: spec.clone(),
        runs,
        aggregate,
        score_sets,
    }
}

fn record(spec: &ExperimentSpec, run: usize, counts: SplitCounts, scores: &ScoreSet, final_loss: Option<f64>) -> Result<RunRecord> {
    let report = evaluate(scores, spec.threshold, spec.positive_class)?;
    Ok(RunRecord {
        run,
        split_seed: spec.split.seed_for_run(run),
        detector_seed: spec.detector_seed(run),
        counts,
        test_anomaly_ratio: counts.test_anomaly_ratio(),
        report,
        final_loss,
    })
}

/// Runs `spec` with the given detector. Each run splits (fixed or
/// reshuffled), fits on the training rows only, scores the test rows and
/// thresholds; runs execute in parallel.
pub fn run_with_detector(
    name: &str,
    dataset: &TabularDataset,
    spec: &ExperimentSpec,
    detector: &dyn Detector,
) -> Result<ExperimentResult> {
    spec.validate()?;
    let sub = subsampled(dataset, spec);
    let ds = sub.as_ref().unwrap_or(dataset);
    let detector_name = detector.name();
    let outcomes = (0..spec.n_runs)
        .into_par_iter()
        .map(|run| -> Result<(RunRecord, ScoreSet)> {
            let run_spec = spec.split.for_run(run);
            let seed = spec.detector_seed(run);
            let s = split::split(ds, &run_spec)?;
            info!(
                "{name} run {run}: split seed {}, detector seed {seed}, train {} / test {}",
                run_spec.seed,
                s.train_indices.len(),
                s.test_indices.len()
            );
            let wrap = |e: Error| -> Error {
                DetectorError::Run {
                    run,
                    source: Box::new(e),
                }
                .into()
            };
            let train = ds.rows(&s.train_indices);
            let model = detector.fit(train.view(), seed).map_err(|e| wrap(e.into()))?;
            let test = ds.rows(&s.test_indices);
            let raw = model.score(test.view()).map_err(|e| wrap(e.into()))?;
            let scores = ScoreSet::new(&detector_name, raw, ds.labels_at(&s.test_indices)).map_err(|e| wrap(e.into()))?;
            let rec = record(spec, run, s.counts, &scores, model.final_loss())?;
            Ok((rec, scores))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(name, ds, spec, spec.label.clone().unwrap_or(detector_name), outcomes))
}

/// Score file path for `run`, resolved against `base_dir`.
pub fn score_path(base_dir: &Path, pattern: &str, run: usize) -> PathBuf {
    base_dir.join(pattern.replace(RUN_PLACEHOLDER, &run.to_string()))
}

fn run_external(
    name: &str,
    dataset: &TabularDataset,
    spec: &ExperimentSpec,
    ext: &ExternalDetector,
    base_dir: &Path,
) -> Result<ExperimentResult> {
    spec.validate()?;
    let sub = subsampled(dataset, spec);
    let ds = sub.as_ref().unwrap_or(dataset);
    if ext.scores.contains(RUN_PLACEHOLDER) {
        let extra = score_path(base_dir, &ext.scores, spec.n_runs);
        if extra.exists() {
            return Err(MetricsError::BadScoreFile {
                path: extra,
                reason: format!("score file present beyond the configured {} runs", spec.n_runs),
            }
            .into());
        }
    }
    let mut outcomes = Vec::with_capacity(spec.n_runs);
    for run in 0..spec.n_runs {
        let path = score_path(base_dir, &ext.scores, run);
        if !path.exists() {
            return Err(MetricsError::BadScoreFile {
                path,
                reason: format!("missing score file for run {run} of {}", spec.n_runs),
            }
            .into());
        }
        let s = split::split(ds, &spec.split.for_run(run))?;
        let file = read_score_file(&path)?;
        let scores = file.to_score_set(&path, &ext.name, &s.test_indices, ds.labels())?;
        info!("{name} run {run}: read {} scores from {}", scores.len(), path.display());
        outcomes.push((record(spec, run, s.counts, &scores, None)?, scores));
    }
    Ok(finish(name, ds, spec, spec.display_name(), outcomes))
}

/// Runs a configured experiment. External score paths resolve against
/// `base_dir`.
pub fn run_experiment(name: &str, dataset: &TabularDataset, spec: &ExperimentSpec, base_dir: &Path) -> Result<ExperimentResult> {
    match &spec.detector {
        DetectorSpec::External(ext) => run_external(name, dataset, spec, ext, base_dir),
        native => run_with_detector(name, dataset, spec, native.native().unwrap()),
    }
}
