//! On-disk dataset cache.
//!
//! `<stem>.bin` holds the scaled matrix column by column:
//!
//! ```text
//! magic   8 bytes  "ADEVCOLM"
//! version u32 LE   1
//! rows    u64 LE   N
//! cols    u64 LE   D
//! values  D*N f64 LE, column-major
//! labels  N bytes, 0 = normal, 1 = anomaly
//! ```
//!
//! `<stem>.json` carries the metadata (name, N, D, anomaly ratio, per-column
//! min/max, feature names, provenance).

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{MinMaxScaler, Provenance, TabularDataset};
use crate::error::{DataError, Error, Result};

const MAGIC: &[u8; 8] = b"ADEVCOLM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheMetadata {
    pub version: u32,
    pub name: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub anomaly_ratio: f64,
    pub feature_names: Vec<String>,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub provenance: Provenance,
}

fn paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.bin")), dir.join(format!("{stem}.json")))
}

/// Writes `<dir>/<name>.bin` and `<dir>/<name>.json`; returns both paths.
pub fn save_cache(ds: &TabularDataset, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let (bin, json) = paths(dir, ds.name());
    let file = fs::File::create(&bin).map_err(|e| Error::io(format!("creating {}", bin.display()), e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(format!("writing {}", bin.display()), e);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(ds.n_samples() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(ds.n_features() as u64).to_le_bytes()).map_err(io)?;
    for col in ds.features().columns() {
        for v in col {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    let labels: Vec<u8> = ds.labels().iter().map(|&l| l as u8).collect();
    w.write_all(&labels).map_err(io)?;
    w.flush().map_err(io)?;

    let meta = CacheMetadata {
        version: VERSION,
        name: ds.name().to_string(),
        n_samples: ds.n_samples(),
        n_features: ds.n_features(),
        anomaly_ratio: ds.anomaly_ratio(),
        feature_names: ds.feature_names().to_vec(),
        mins: ds.scaler().mins.clone(),
        maxs: ds.scaler().maxs.clone(),
        provenance: ds.provenance().clone(),
    };
    let text = serde_json::to_string_pretty(&meta)?;
    fs::write(&json, text + "\n").map_err(|e| Error::io(format!("writing {}", json.display()), e))?;
    Ok((bin, json))
}

pub fn load_cache(dir: &Path, name: &str) -> Result<TabularDataset> {
    let (bin, json) = paths(dir, name);
    let bad = |reason: &str| {
        Error::from(DataError::BadCache {
            path: bin.clone(),
            reason: reason.to_string(),
        })
    };
    if !bin.is_file() {
        return Err(DataError::MissingFile(bin).into());
    }
    let meta_text =
        fs::read_to_string(&json).map_err(|e| Error::io(format!("reading {}", json.display()), e))?;
    let meta: CacheMetadata = serde_json::from_str(&meta_text)?;

    let mut bytes = Vec::new();
    fs::File::open(&bin)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(format!("reading {}", bin.display()), e))?;
    if bytes.len() < 28 || &bytes[..8] != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let d = u64::from_le_bytes(bytes[20..28].try_into().unwrap()) as usize;
    if n != meta.n_samples || d != meta.n_features || meta.mins.len() != d {
        return Err(bad("shape disagrees with metadata"));
    }
    let expected = 28 + n * d * 8 + n;
    if bytes.len() != expected {
        return Err(bad(&format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let mut features = Array2::<f64>::zeros((n, d));
    let mut offset = 28;
    for j in 0..d {
        for i in 0..n {
            features[[i, j]] = f64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
            offset += 8;
        }
    }
    let labels = bytes[offset..].iter().map(|&b| b != 0).collect();
    let scaler = MinMaxScaler {
        mins: meta.mins,
        maxs: meta.maxs,
    };
    Ok(TabularDataset::from_scaled(
        &meta.name,
        features,
        labels,
        meta.feature_names,
        scaler,
        meta.provenance,
    ))
}
