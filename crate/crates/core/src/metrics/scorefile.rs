//! The `index,score,label` CSV exchanged with external detectors.
//!
//! ```text
//! # orientation: low_is_anomalous
//! index,score,label
//! 17,0.25,0
//! 40,-3.5,1
//! ```
//!
//! `index` is a dataset row index taken from the exported test-index list.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Orientation, ScoreSet};
use crate::error::{Error, MetricsError, Result};

const ORIENTATION_PREFIX: &str = "# orientation:";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRow {
    pub index: usize,
    pub score: f64,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreFile {
    pub orientation: Orientation,
    pub rows: Vec<ScoreRow>,
}

fn bad(path: &Path, reason: impl Into<String>) -> Error {
    MetricsError::BadScoreFile {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
    .into()
}

pub fn read_score_file(path: &Path) -> Result<ScoreFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse(path, &text)
}

fn parse(path: &Path, text: &str) -> Result<ScoreFile> {
    let mut orientation = None;
    let mut header_seen = false;
    let mut rows = Vec::new();
    let mut seen = HashMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let at = lineno + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(ORIENTATION_PREFIX) {
            let o = Orientation::parse(rest)
                .ok_or_else(|| bad(path, format!("line {at}: unknown orientation {:?}", rest.trim())))?;
            if orientation.replace(o).is_some() {
                return Err(bad(path, format!("line {at}: orientation declared twice")));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != ["index", "score", "label"] {
                return Err(bad(path, format!("line {at}: expected header index,score,label")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(bad(path, format!("line {at}: expected 3 fields, found {}", fields.len())));
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| bad(path, format!("line {at}: bad index {:?}", fields[0])))?;
        let score: f64 = fields[1]
            .parse()
            .map_err(|_| bad(path, format!("line {at}: bad score {:?}", fields[1])))?;
        if !score.is_finite() {
            return Err(bad(path, format!("line {at}: non-finite score")));
        }
        let label = match fields[2] {
            "0" => false,
            "1" => true,
            other => return Err(bad(path, format!("line {at}: label must be 0 or 1, found {other:?}"))),
        };
        if let Some(prev) = seen.insert(index, at) {
            return Err(bad(path, format!("line {at}: index {index} already listed on line {prev}")));
        }
        rows.push(ScoreRow { index, score, label });
    }

    let orientation = orientation.ok_or_else(|| bad(path, "missing '# orientation:' line"))?;
    if !header_seen {
        return Err(bad(path, "missing header"));
    }
    if rows.is_empty() {
        return Err(bad(path, "no rows"));
    }
    Ok(ScoreFile { orientation, rows })
}

pub fn write_score_file(path: &Path, file: &ScoreFile) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{ORIENTATION_PREFIX} {}", file.orientation.as_str()).unwrap();
    writeln!(out, "index,score,label").unwrap();
    for r in &file.rows {
        // `{:?}` on f64 is the shortest representation that round-trips.
        writeln!(out, "{},{:?},{}", r.index, r.score, r.label as u8).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

impl ScoreFile {
    /// Checks the rows against the exported test indices and the dataset's
    /// own labels, then builds a `ScoreSet` in test-index order.
    pub fn to_score_set(
        &self,
        path: &Path,
        detector_name: &str,
        test_indices: &[usize],
        dataset_labels: &[bool],
    ) -> Result<ScoreSet> {
        if self.rows.len() != test_indices.len() {
            return Err(bad(
                path,
                format!("{} rows for {} test samples", self.rows.len(), test_indices.len()),
            ));
        }
        let by_index: HashMap<usize, &ScoreRow> = self.rows.iter().map(|r| (r.index, r)).collect();
        let mut scores = Vec::with_capacity(test_indices.len());
        let mut labels = Vec::with_capacity(test_indices.len());
        for &i in test_indices {
            let row = by_index
                .get(&i)
                .ok_or_else(|| bad(path, format!("test index {i} has no score")))?;
            let truth = *dataset_labels
                .get(i)
                .ok_or_else(|| bad(path, format!("index {i} outside the dataset")))?;
            if row.label != truth {
                return Err(bad(path, format!("label for index {i} disagrees with the dataset")));
            }
            scores.push(row.score);
            labels.push(truth);
        }
        Ok(ScoreSet::with_orientation(detector_name, scores, labels, self.orientation)?)
    }
}
