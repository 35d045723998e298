//! The five reference datasets: published shape, expected file layout, and
//! the reference hyperparameters used for the native detectors.

use std::path::Path;

use super::DatasetSchema;

/// Reference hyperparameters for the native detectors on one dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceHyperparameters {
    pub lof_neighbors: usize,
    pub dae_batch: usize,
    pub dae_epochs: usize,
    pub dae_latent: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub file: &'static str,
    pub n_samples: usize,
    pub n_features: usize,
    /// Published ratio, rounded to four decimals.
    pub anomaly_ratio: f64,
    pub hyper: ReferenceHyperparameters,
}

impl CatalogEntry {
    /// Anomaly count implied by the published `(N, rho)` pair.
    pub fn expected_anomalies(&self) -> usize {
        (self.n_samples as f64 * self.anomaly_ratio).round() as usize
    }

    /// Ingestion schema for the file layout described in the README.
    pub fn schema(&self, data_dir: &Path) -> DatasetSchema {
        let path = data_dir.join(self.file);
        match self.name {
            "arrhythmia" | "thyroid" => {
                // CSV exported from the ODDS .mat files: x0..x{D-1},label.
                DatasetSchema::new(self.name, path, "label", &["1"])
            }
            "kdd10" => {
                let mut s = DatasetSchema::new(self.name, path, "label", &["normal."]);
                s.has_header = false;
                s.columns = Some(kdd_columns(false));
                s.categorical = KDD_CATEGORICAL.iter().map(|c| c.to_string()).collect();
                s.drop = vec!["num_outbound_cmds".into(), "is_host_login".into()];
                s
            }
            "nsl-kdd" => {
                let mut s = DatasetSchema::new(self.name, path, "label", &[]);
                s.normal_classes = vec!["normal".into()];
                s.has_header = false;
                s.columns = Some(kdd_columns(true));
                s.categorical = KDD_CATEGORICAL.iter().map(|c| c.to_string()).collect();
                s.drop = vec!["num_outbound_cmds".into(), "difficulty".into()];
                s
            }
            "cse-cic-ids2018" => {
                let mut s = DatasetSchema::new(self.name, path, "Label", &[]);
                s.normal_classes = vec!["Benign".into()];
                s.drop = vec!["Timestamp".into()];
                s
            }
            other => unreachable!("catalog entry without schema: {other}"),
        }
    }
}

pub const CATALOG: [CatalogEntry; 5] = [
    CatalogEntry {
        name: "arrhythmia",
        file: "arrhythmia.csv",
        n_samples: 452,
        n_features: 274,
        anomaly_ratio: 0.1460,
        hyper: ReferenceHyperparameters {
            lof_neighbors: 50,
            dae_batch: 128,
            dae_epochs: 10_000,
            dae_latent: 3,
            learning_rate: 1e-4,
        },
    },
    CatalogEntry {
        name: "cse-cic-ids2018",
        file: "cse-cic-ids2018.csv",
        n_samples: 16_232_944,
        n_features: 83,
        anomaly_ratio: 0.1693,
        hyper: ReferenceHyperparameters {
            lof_neighbors: 15,
            dae_batch: 1024,
            dae_epochs: 100,
            dae_latent: 2,
            learning_rate: 1e-4,
        },
    },
    CatalogEntry {
        name: "kdd10",
        file: "kddcup.data_10_percent",
        n_samples: 494_021,
        n_features: 42,
        anomaly_ratio: 0.1969,
        hyper: ReferenceHyperparameters {
            lof_neighbors: 100,
            dae_batch: 1024,
            dae_epochs: 100,
            dae_latent: 2,
            learning_rate: 1e-4,
        },
    },
    CatalogEntry {
        name: "nsl-kdd",
        file: "nsl-kdd.txt",
        n_samples: 148_517,
        n_features: 42,
        anomaly_ratio: 0.4811,
        hyper: ReferenceHyperparameters {
            lof_neighbors: 20,
            dae_batch: 1024,
            dae_epochs: 100,
            dae_latent: 2,
            learning_rate: 1e-4,
        },
    },
    CatalogEntry {
        name: "thyroid",
        file: "thyroid.csv",
        n_samples: 3772,
        n_features: 6,
        anomaly_ratio: 0.0246,
        hyper: ReferenceHyperparameters {
            lof_neighbors: 20,
            dae_batch: 128,
            dae_epochs: 5000,
            dae_latent: 2,
            learning_rate: 1e-4,
        },
    },
];

pub fn lookup(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

const KDD_CATEGORICAL: [&str; 7] = [
    "protocol_type",
    "service",
    "flag",
    "land",
    "logged_in",
    "is_host_login",
    "is_guest_login",
];

const KDD_FEATURES: [&str; 41] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

fn kdd_columns(with_difficulty: bool) -> Vec<String> {
    let mut cols: Vec<String> = KDD_FEATURES.iter().map(|c| c.to_string()).collect();
    cols.push("label".into());
    if with_difficulty {
        cols.push("difficulty".into());
    }
    cols
}
