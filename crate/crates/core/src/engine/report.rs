//! On-disk results and the tables rendered from them.
//!
//! ```text
//! <out>/results/<dataset>/<detector>/run-<r>.json
//! <out>/results/<dataset>/<detector>/aggregate.json
//! <out>/results/<dataset>/<detector>/plots/{pr,roc}-run0.csv
//! <out>/aggregate.csv
//! <out>/report.md
//! <out>/plots/<metric>.csv
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DatasetSummary, ExperimentResult, Metric, RunAggregate};
use crate::error::{Error, Result};
use crate::metrics::{pr_curve, roc_curve, CurvePoint};

/// The contents of one `aggregate.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub experiment: String,
    pub dataset: String,
    pub detector: String,
    pub n_runs: usize,
    /// Metrics the experiment asked to show.
    pub metrics: Vec<Metric>,
    pub summary: DatasetSummary,
    pub aggregate: RunAggregate,
}

impl ReportEntry {
    pub fn of(result: &ExperimentResult) -> Self {
        Self {
            experiment: result.name.clone(),
            dataset: result.dataset.name.clone(),
            detector: result.detector.clone(),
            n_runs: result.runs.len(),
            metrics: result.spec.metrics.clone(),
            summary: result.dataset.clone(),
            aggregate: result.aggregate.clone(),
        }
    }
}

fn path_component(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

pub fn experiment_dir(out: &Path, dataset: &str, detector: &str) -> PathBuf {
    out.join("results").join(path_component(dataset)).join(path_component(detector))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("create {}", dir.display()), e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(format!("write {}", path.display()), e))
}

fn curve_csv(x: &str, y: &str, points: &[CurvePoint]) -> String {
    let mut s = format!("{x},{y},threshold\n");
    for p in points {
        let _ = writeln!(s, "{:.6},{:.6},{}", p.x, p.y, p.threshold);
    }
    s
}

/// Writes per-run records, the aggregate and the run-0 curves. Returns the
/// experiment directory.
pub fn write_experiment(out: &Path, result: &ExperimentResult) -> Result<PathBuf> {
    let dir = experiment_dir(out, &result.dataset.name, &result.detector);
    for run in &result.runs {
        write_text(&dir.join(format!("run-{}.json", run.run)), &serde_json::to_string_pretty(run)?)?;
    }
    write_text(&dir.join("aggregate.json"), &serde_json::to_string_pretty(&ReportEntry::of(result))?)?;
    if let Some(first) = result.score_sets.first() {
        write_text(&dir.join("plots/pr-run0.csv"), &curve_csv("recall", "precision", &pr_curve(first)?))?;
        write_text(&dir.join("plots/roc-run0.csv"), &curve_csv("fpr", "tpr", &roc_curve(first)?))?;
    }
    Ok(dir)
}

/// Reads every `results/*/*/aggregate.json` under `out`.
pub fn load_entries(out: &Path) -> Result<Vec<ReportEntry>> {
    let root = out.join("results");
    let mut entries = Vec::new();
    let read_dir = |p: &Path| fs::read_dir(p).map_err(|e| Error::io(format!("read {}", p.display()), e));
    for ds in read_dir(&root)? {
        let ds = ds.map_err(|e| Error::io("read results", e))?.path();
        if !ds.is_dir() {
            continue;
        }
        for det in read_dir(&ds)? {
            let file = det.map_err(|e| Error::io("read results", e))?.path().join("aggregate.json");
            if file.is_file() {
                let text = fs::read_to_string(&file).map_err(|e| Error::io(format!("read {}", file.display()), e))?;
                entries.push(serde_json::from_str(&text)?);
            }
        }
    }
    sort_entries(&mut entries);
    Ok(entries)
}

fn sort_entries(entries: &mut [ReportEntry]) {
    entries.sort_by(|a, b| (&a.dataset, &a.detector, &a.experiment).cmp(&(&b.dataset, &b.detector, &b.experiment)));
}

fn union_metrics(entries: &[ReportEntry]) -> Vec<Metric> {
    let set: BTreeSet<Metric> = entries.iter().flat_map(|e| e.metrics.iter().copied()).collect();
    set.into_iter().collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per (dataset, detector), sorted, with mean and std columns for
/// every metric any entry asked for.
pub fn render_aggregate_csv(entries: &[ReportEntry]) -> String {
    let mut entries = entries.to_vec();
    sort_entries(&mut entries);
    let metrics = union_metrics(&entries);
    let mut s = String::from("dataset,detector,n_runs");
    for m in &metrics {
        let _ = write!(s, ",{0}_mean,{0}_std", m.as_str());
    }
    s.push('\n');
    for e in &entries {
        let _ = write!(s, "{},{},{}", csv_field(&e.dataset), csv_field(&e.detector), e.n_runs);
        for m in &metrics {
            let v = e.aggregate.get(*m);
            let _ = write!(s, ",{:.6},{:.6}", v.mean, v.std);
        }
        s.push('\n');
    }
    s
}

fn table(out: &mut String, title: &str, rows: &[&ReportEntry], metrics: &[Metric]) {
    if metrics.is_empty() {
        return;
    }
    let best: Vec<f64> = metrics
        .iter()
        .map(|m| rows.iter().map(|e| e.aggregate.get(*m).mean).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let _ = writeln!(out, "### {title}\n");
    out.push_str("| Detector |");
    for m in metrics {
        let _ = write!(out, " {} |", m.label());
    }
    out.push_str("\n|---|");
    for _ in metrics {
        out.push_str("---|");
    }
    out.push('\n');
    for e in rows {
        let _ = write!(out, "| {} |", e.detector);
        for (m, b) in metrics.iter().zip(&best) {
            let v = e.aggregate.get(*m);
            let cell = format!("{:.1} ± {:.1}", 100.0 * v.mean, 100.0 * v.std);
            if v.mean == *b {
                let _ = write!(out, " **{cell}** |");
            } else {
                let _ = write!(out, " {cell} |");
            }
        }
        out.push('\n');
    }
    out.push('\n');
}

/// Per-dataset markdown tables in percent, mean ± std, with the best mean
/// in each column in bold.
pub fn render_markdown(entries: &[ReportEntry]) -> String {
    let mut entries = entries.to_vec();
    sort_entries(&mut entries);
    let metrics = union_metrics(&entries);
    let threshold: Vec<Metric> = metrics
        .iter()
        .copied()
        .filter(|m| matches!(m, Metric::Precision | Metric::Recall | Metric::F1))
        .collect();
    let ranking: Vec<Metric> = metrics
        .iter()
        .copied()
        .filter(|m| matches!(m, Metric::Auroc | Metric::Aupr))
        .collect();
    let mut out = String::from("# Results\n\n");
    let datasets: Vec<&str> = {
        let mut d: Vec<&str> = entries.iter().map(|e| e.dataset.as_str()).collect();
        d.dedup();
        d
    };
    for ds in datasets {
        let rows: Vec<&ReportEntry> = entries.iter().filter(|e| e.dataset == ds).collect();
        let s = &rows[0].summary;
        let _ = writeln!(
            out,
            "## {ds}\n\n{} samples, {} features, anomaly ratio {:.2}%, {} run(s) per detector.\n",
            s.n_samples,
            s.n_features,
            100.0 * s.anomaly_ratio,
            rows.iter().map(|e| e.n_runs).max().unwrap_or(0)
        );
        table(&mut out, "Threshold metrics", &rows, &threshold);
        table(&mut out, "Ranking metrics", &rows, &ranking);
    }
    out
}

/// `dataset,detector,mean,std` for one metric.
pub fn render_metric_csv(entries: &[ReportEntry], metric: Metric) -> String {
    let mut entries = entries.to_vec();
    sort_entries(&mut entries);
    let mut s = String::from("dataset,detector,mean,std\n");
    for e in entries.iter().filter(|e| e.metrics.contains(&metric)) {
        let v = e.aggregate.get(metric);
        let _ = writeln!(s, "{},{},{:.6},{:.6}", csv_field(&e.dataset), csv_field(&e.detector), v.mean, v.std);
    }
    s
}

/// Writes `aggregate.csv`, `report.md` and `plots/<metric>.csv` under `out`.
pub fn render_report(entries: &[ReportEntry], out: &Path) -> Result<()> {
    write_text(&out.join("aggregate.csv"), &render_aggregate_csv(entries))?;
    write_text(&out.join("report.md"), &render_markdown(entries))?;
    for m in union_metrics(entries) {
        write_text(&out.join(format!("plots/{}.csv", m.as_str())), &render_metric_csv(entries, m))?;
    }
    Ok(())
}
