//! TOML experiment configuration.
//!
//! ```toml
//! data_dir = "data"
//!
//! [dataset.thyroid]
//! path = "thyroid.csv"
//! label = "label"
//! anomaly_classes = ["1"]
//!
//! [experiment.thyroid_lof]
//! dataset = "thyroid"
//! n_runs = 20
//! threshold = "optimal-f1"
//!
//! [experiment.thyroid_lof.split]
//! strategy = "proposed"
//! seed = 7
//!
//! [experiment.thyroid_lof.detector]
//! kind = "lof"
//! k = 20
//! ```
//!
//! Experiments may also name a catalog dataset without declaring it.
//! Overrides use dotted keys, e.g. `experiment.thyroid_lof.n_runs=5`; the
//! value is read as a TOML literal and falls back to a plain string.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::ExperimentSpec;
use crate::data::{catalog, DatasetSchema};
use crate::error::{ConfigError, Error, Result};

/// Environment variable naming the default data directory.
pub const DATA_DIR_ENV: &str = "ADEVAL_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Relative dataset paths resolve against this directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    #[serde(default)]
    pub dataset: BTreeMap<String, DatasetSchema>,
    #[serde(default)]
    pub experiment: BTreeMap<String, ExperimentSpec>,
}

/// A parsed configuration together with where it came from.
#[derive(Debug, Clone)]
pub struct Config {
    pub file: ConfigFile,
    /// Directory of the config file; external score paths resolve here.
    pub base_dir: PathBuf,
    pub data_dir: PathBuf,
}

fn parse_err(path: &Path, reason: impl ToString) -> Error {
    ConfigError::Parse {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
    .into()
}

/// Applies one `a.b.c=value` override to a raw TOML table.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(assignment.to_string()))?;
    let parts: Vec<&str> = key.trim().split('.').map(str::trim).collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::BadOverride(assignment.to_string()).into());
    }
    let value = format!("v = {}", raw.trim())
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    let (last, parents) = parts.split_last().unwrap();
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::BadOverride(format!("{assignment}: `{p}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

pub fn parse_config(text: &str, origin: &Path, overrides: &[String]) -> Result<ConfigFile> {
    let mut table: Table = text.parse().map_err(|e| parse_err(origin, e))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let file: ConfigFile = table.try_into().map_err(|e| parse_err(origin, e))?;
    for spec in file.experiment.values() {
        spec.validate()?;
    }
    Ok(file)
}

/// Reads a config file. The data directory is, in order: `data_dir_flag`,
/// the file's `data_dir` (relative to the file), `$ADEVAL_DATA_DIR`, `data`.
pub fn load_config(path: &Path, overrides: &[String], data_dir_flag: Option<&Path>) -> Result<Config> {
    let text = fs::read_to_string(path).map_err(|e| parse_err(path, e))?;
    let file = parse_config(&text, path, overrides)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let data_dir = match (data_dir_flag, &file.data_dir) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(d)) => base_dir.join(d),
        (None, None) => std::env::var_os(DATA_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("data")),
    };
    Ok(Config {
        file,
        base_dir,
        data_dir,
    })
}

impl Config {
    /// The schema for a dataset name: a declared section first, then the
    /// catalog. Relative paths are joined onto the data directory.
    pub fn dataset_schema(&self, name: &str) -> Result<DatasetSchema> {
        let mut schema = if let Some(s) = self.file.dataset.get(name) {
            let mut s = s.clone();
            if s.name.is_empty() {
                s.name = name.to_string();
            }
            s
        } else if let Some(entry) = catalog::lookup(name) {
            return Ok(entry.schema(&self.data_dir));
        } else {
            return Err(ConfigError::UnknownReference {
                kind: "dataset",
                name: name.to_string(),
            }
            .into());
        };
        if schema.path.is_relative() {
            schema.path = self.data_dir.join(&schema.path);
        }
        Ok(schema)
    }

    pub fn experiment(&self, name: &str) -> Result<&ExperimentSpec> {
        self.file.experiment.get(name).ok_or_else(|| {
            ConfigError::UnknownReference {
                kind: "experiment",
                name: name.to_string(),
            }
            .into()
        })
    }

    /// Experiments to run: the named ones, or all of them in name order.
    pub fn select_experiments(&self, names: &[String]) -> Result<Vec<(String, ExperimentSpec)>> {
        if names.is_empty() {
            return Ok(self.file.experiment.iter().map(|(k, v)| (k.clone(), v.clone())).collect());
        }
        names
            .iter()
            .map(|n| Ok((n.clone(), self.experiment(n)?.clone())))
            .collect()
    }

    /// The configuration as it was interpreted, for the audit trail.
    pub fn resolved_toml(&self) -> String {
        let mut file = self.file.clone();
        file.data_dir = Some(self.data_dir.clone());
        toml::to_string(&file).expect("config serialises")
    }
}
