//! Dataset ingestion: schema resolution, one-hot encoding, label mapping and
//! min-max scaling.

mod cache;
pub mod catalog;
mod labels;
mod scale;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use log::{info, warn};
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};

pub use cache::{load_cache, save_cache, CacheMetadata};
pub use labels::{map_positive_class, normalize_class, PositiveClassMapping};
pub use scale::{minmax_scale, MinMaxScaler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Categorical,
    Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub dropped: bool,
}

fn default_missing() -> Vec<String> {
    ["", "?", "NA", "NaN", "nan", "Infinity", "-Infinity", "inf", "-inf"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn default_true() -> bool {
    true
}

/// Declarative description of one tabular dataset on disk.
///
/// Columns not named in `categorical`, `drop` or `label` are continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSchema {
    #[serde(default)]
    pub name: String,
    pub path: PathBuf,
    pub label: String,
    /// Classes mapped to the positive (anomaly) label.
    #[serde(default)]
    pub anomaly_classes: Vec<String>,
    /// Alternative to `anomaly_classes`: every observed class not listed
    /// here is an anomaly.
    #[serde(default)]
    pub normal_classes: Vec<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub drop: Vec<String>,
    /// Column names for files without a header row.
    #[serde(default)]
    pub columns: Option<Vec<String>>,
    #[serde(default = "default_true")]
    pub has_header: bool,
    /// Cell values treated as missing; rows containing one in a kept column
    /// are dropped.
    #[serde(default = "default_missing")]
    pub missing_values: Vec<String>,
}

impl DatasetSchema {
    pub fn new(name: &str, path: impl Into<PathBuf>, label: &str, anomaly_classes: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            path: path.into(),
            label: label.to_string(),
            anomaly_classes: anomaly_classes.iter().map(|s| s.to_string()).collect(),
            normal_classes: Vec::new(),
            categorical: Vec::new(),
            drop: Vec::new(),
            columns: None,
            has_header: true,
            missing_values: default_missing(),
        }
    }

    /// The anomaly classes, resolving `normal_classes` against the classes
    /// actually observed.
    pub fn anomaly_class_set(
        &self,
        observed: &BTreeMap<String, usize>,
    ) -> Result<Vec<String>, DataError> {
        match (self.anomaly_classes.is_empty(), self.normal_classes.is_empty()) {
            (false, true) => Ok(self.anomaly_classes.clone()),
            (true, false) => {
                let normal: BTreeSet<String> =
                    self.normal_classes.iter().map(|c| normalize_class(c)).collect();
                if let Some(c) = normal.iter().find(|c| !observed.contains_key(*c)) {
                    return Err(DataError::UnobservedClass(c.clone()));
                }
                let anomalies: Vec<String> = observed
                    .keys()
                    .filter(|c| !normal.contains(*c))
                    .cloned()
                    .collect();
                if anomalies.is_empty() {
                    return Err(DataError::NoAnomalyClasses);
                }
                Ok(anomalies)
            }
            (true, true) => Err(DataError::NoAnomalyClasses),
            (false, false) => Err(DataError::Schema(
                "anomaly_classes and normal_classes are mutually exclusive".into(),
            )),
        }
    }

    /// Resolves the column list against the actual header.
    pub fn resolve_columns(&self, header: &[String]) -> Result<Vec<ColumnSpec>, DataError> {
        let known: BTreeSet<&str> = header.iter().map(String::as_str).collect();
        if !known.contains(self.label.as_str()) {
            return Err(DataError::MissingLabelColumn(self.label.clone()));
        }
        for name in self.categorical.iter().chain(&self.drop) {
            if !known.contains(name.as_str()) {
                return Err(DataError::UnknownColumn(name.clone()));
            }
        }
        let categorical: BTreeSet<&str> = self.categorical.iter().map(String::as_str).collect();
        let dropped: BTreeSet<&str> = self.drop.iter().map(String::as_str).collect();
        Ok(header
            .iter()
            .map(|name| {
                let kind = if *name == self.label {
                    ColumnKind::Label
                } else if categorical.contains(name.as_str()) {
                    ColumnKind::Categorical
                } else {
                    ColumnKind::Continuous
                };
                ColumnSpec {
                    name: name.clone(),
                    kind,
                    dropped: kind != ColumnKind::Label && dropped.contains(name.as_str()),
                }
            })
            .collect())
    }
}

/// Where a dataset came from and what ingestion did to it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Option<PathBuf>,
    pub raw_columns: usize,
    pub rejected_rows: usize,
    pub class_counts: BTreeMap<String, usize>,
}

/// Scaled feature matrix with binary labels (true = anomaly).
///
/// Immutable once built. Detectors only ever receive views of the feature
/// matrix; labels stay with the evaluation code.
#[derive(Debug, Clone)]
pub struct TabularDataset {
    name: String,
    features: Array2<f64>,
    labels: Vec<bool>,
    feature_names: Vec<String>,
    scaler: MinMaxScaler,
    provenance: Provenance,
}

impl TabularDataset {
    /// Builds a dataset from unscaled features, scaling them over all rows.
    pub fn from_raw(name: &str, raw: Array2<f64>, labels: Vec<bool>) -> Result<Self, DataError> {
        let names = (0..raw.ncols()).map(|j| format!("x{j}")).collect();
        Self::from_parts(name, raw, labels, names, Provenance::default())
    }

    fn from_parts(
        name: &str,
        raw: Array2<f64>,
        labels: Vec<bool>,
        feature_names: Vec<String>,
        provenance: Provenance,
    ) -> Result<Self, DataError> {
        if raw.nrows() == 0 {
            return Err(DataError::Empty(String::new()));
        }
        if raw.ncols() == 0 {
            return Err(DataError::Empty(": no feature columns".into()));
        }
        if labels.len() != raw.nrows() {
            return Err(DataError::DimensionMismatch {
                expected: raw.nrows(),
                got: labels.len(),
            });
        }
        let (features, scaler) = minmax_scale(raw.view());
        Ok(Self {
            name: name.to_string(),
            features,
            labels,
            feature_names,
            scaler,
            provenance,
        })
    }

    /// Reassembles a dataset whose features are already scaled.
    pub(crate) fn from_scaled(
        name: &str,
        features: Array2<f64>,
        labels: Vec<bool>,
        feature_names: Vec<String>,
        scaler: MinMaxScaler,
        provenance: Provenance,
    ) -> Self {
        Self {
            name: name.to_string(),
            features,
            labels,
            feature_names,
            scaler,
            provenance,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }
    pub fn labels(&self) -> &[bool] {
        &self.labels
    }
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }
    pub fn scaler(&self) -> &MinMaxScaler {
        &self.scaler
    }
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }
    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }
    pub fn n_anomalies(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
    /// Fraction of anomalous samples.
    pub fn anomaly_ratio(&self) -> f64 {
        self.n_anomalies() as f64 / self.n_samples() as f64
    }
    pub fn normal_ratio(&self) -> f64 {
        1.0 - self.anomaly_ratio()
    }

    /// Copies the given rows into a new matrix.
    pub fn rows(&self, indices: &[usize]) -> Array2<f64> {
        self.features.select(Axis(0), indices)
    }

    pub fn labels_at(&self, indices: &[usize]) -> Vec<bool> {
        indices.iter().map(|&i| self.labels[i]).collect()
    }

    /// Keeps only the given rows (e.g. a subsample). Scaling statistics are
    /// carried over unchanged.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            features: self.rows(indices),
            labels: self.labels_at(indices),
            feature_names: self.feature_names.clone(),
            scaler: self.scaler.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

enum ColumnData {
    Continuous(Vec<f64>),
    Categorical(Vec<String>),
}

/// Reads a CSV file according to `schema`.
///
/// Rows with a missing or unparseable value in any kept column are dropped
/// and counted. Categorical columns are one-hot encoded in place (levels in
/// lexicographic order), then every column is min-max scaled over the full
/// dataset.
pub fn load_dataset(path: &Path, schema: &DatasetSchema) -> Result<TabularDataset> {
    if !path.is_file() {
        return Err(DataError::MissingFile(path.to_path_buf()).into());
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = match (&schema.columns, schema.has_header) {
        (Some(cols), _) => cols.clone(),
        (None, true) => reader.headers()?.iter().map(|s| s.to_string()).collect(),
        (None, false) => {
            return Err(DataError::Schema(
                "file has no header and the schema lists no columns".into(),
            )
            .into())
        }
    };
    let columns = schema.resolve_columns(&header)?;
    let missing: BTreeSet<&str> = schema.missing_values.iter().map(String::as_str).collect();
    let label_pos = columns
        .iter()
        .position(|c| c.kind == ColumnKind::Label)
        .expect("resolve_columns guarantees a label column");
    let kept: Vec<usize> = (0..columns.len())
        .filter(|&j| columns[j].kind != ColumnKind::Label && !columns[j].dropped)
        .collect();

    let mut data: Vec<ColumnData> = kept
        .iter()
        .map(|&j| match columns[j].kind {
            ColumnKind::Categorical => ColumnData::Categorical(Vec::new()),
            _ => ColumnData::Continuous(Vec::new()),
        })
        .collect();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut rejected = 0usize;
    let mut parsed = vec![0.0f64; kept.len()];

    for record in reader.records() {
        let record = record?;
        if record.len() != header.len() {
            rejected += 1;
            continue;
        }
        let label = &record[label_pos];
        if missing.contains(label) {
            rejected += 1;
            continue;
        }
        let mut ok = true;
        for (slot, &j) in kept.iter().enumerate() {
            let cell = &record[j];
            if missing.contains(cell) {
                ok = false;
                break;
            }
            if columns[j].kind == ColumnKind::Continuous {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => parsed[slot] = v,
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if !ok {
            rejected += 1;
            continue;
        }
        for (slot, &j) in kept.iter().enumerate() {
            match &mut data[slot] {
                ColumnData::Continuous(v) => v.push(parsed[slot]),
                ColumnData::Categorical(v) => v.push(record[j].to_string()),
            }
        }
        raw_labels.push(label.to_string());
    }

    if rejected > 0 {
        warn!("{}: dropped {rejected} row(s) with missing or invalid values", schema.name);
    }
    let n = raw_labels.len();
    if n == 0 {
        return Err(DataError::Empty(format!(" ({})", path.display())).into());
    }
    let class_counts = labels::class_counts(&raw_labels);
    if class_counts.len() < 2 {
        return Err(DataError::DegenerateLabels {
            column: schema.label.clone(),
            distinct: class_counts.len(),
        }
        .into());
    }
    let anomaly_classes = schema.anomaly_class_set(&class_counts)?;
    let mapping = map_positive_class(&raw_labels, &anomaly_classes)?;

    // Expand categoricals into indicator columns.
    let mut out_columns: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (slot, &j) in kept.iter().enumerate() {
        match std::mem::replace(&mut data[slot], ColumnData::Continuous(Vec::new())) {
            ColumnData::Continuous(v) => {
                out_columns.push(v);
                names.push(columns[j].name.clone());
            }
            ColumnData::Categorical(values) => {
                let levels: BTreeSet<&str> = values.iter().map(String::as_str).collect();
                let code: HashMap<&str, usize> =
                    levels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
                let base = out_columns.len();
                for level in &levels {
                    out_columns.push(vec![0.0; n]);
                    names.push(format!("{}={}", columns[j].name, level));
                }
                for (row, v) in values.iter().enumerate() {
                    out_columns[base + code[v.as_str()]][row] = 1.0;
                }
            }
        }
    }
    let d = out_columns.len();
    let mut raw = Array2::<f64>::zeros((n, d));
    for (j, col) in out_columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            raw[[i, j]] = v;
        }
    }

    let provenance = Provenance {
        source: Some(path.to_path_buf()),
        raw_columns: header.len(),
        rejected_rows: rejected,
        class_counts,
    };
    let ds = TabularDataset::from_parts(&schema.name, raw, mapping.labels, names, provenance)?;
    info!(
        "loaded {}: N={} D={} rho={:.4} (rejected {})",
        ds.name(),
        ds.n_samples(),
        ds.n_features(),
        ds.anomaly_ratio(),
        rejected
    );
    Ok(ds)
}
