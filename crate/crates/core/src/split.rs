//! Train/test split strategies.
//!
//! `Proposed` is the protocol split: a fraction of the normals for training,
//! the remaining normals plus every anomaly for testing. The other strategies
//! reproduce splits found in earlier evaluations so that their effect can be
//! measured.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result, SplitError};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitStrategy {
    /// Train on a fraction of the normals; test on the rest plus all anomalies.
    Proposed,
    /// Proposed with the fraction pinned to one half.
    Recycling,
    /// Halve the full dataset, train on one half minus its anomalies, test on
    /// the other half. Anomalies in the training half are thrown away.
    Discarding,
    /// Train on half the normals; test on all anomalies and as many normals.
    BalancedTest,
    /// Train on half the anomalies; test on the other half plus all normals.
    AnomalyTrain,
}

impl SplitStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            SplitStrategy::Proposed => "proposed",
            SplitStrategy::Recycling => "recycling",
            SplitStrategy::Discarding => "discarding",
            SplitStrategy::BalancedTest => "balanced-test",
            SplitStrategy::AnomalyTrain => "anomaly-train",
        }
    }
}

fn default_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub strategy: SplitStrategy,
    pub seed: u64,
    #[serde(default = "default_fraction")]
    pub normal_train_fraction: f64,
    #[serde(default)]
    pub corruption_ratio: f64,
    #[serde(default)]
    pub reshuffle_each_run: bool,
}

impl SplitSpec {
    pub fn new(strategy: SplitStrategy, seed: u64) -> Self {
        Self {
            strategy,
            seed,
            normal_train_fraction: 0.5,
            corruption_ratio: 0.0,
            reshuffle_each_run: false,
        }
    }

    pub fn validate(&self) -> Result<(), SplitError> {
        if !(self.normal_train_fraction > 0.0 && self.normal_train_fraction < 1.0) {
            return Err(SplitError::BadFraction(self.normal_train_fraction));
        }
        if !(0.0..1.0).contains(&self.corruption_ratio) {
            return Err(SplitError::BadCorruptionRatio(self.corruption_ratio));
        }
        if self.corruption_ratio > 0.0 && self.strategy != SplitStrategy::Proposed {
            return Err(SplitError::CorruptionNotAllowed);
        }
        Ok(())
    }

    /// Seed used for run `run`: the base seed for a fixed split, a derived
    /// one per run when reshuffling.
    pub fn seed_for_run(&self, run: usize) -> u64 {
        if self.reshuffle_each_run {
            derive_seed(self.seed, run as u64)
        } else {
            self.seed
        }
    }

    pub fn for_run(&self, run: usize) -> Self {
        Self {
            seed: self.seed_for_run(run),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train_normals: usize,
    pub train_anomalies: usize,
    pub test_normals: usize,
    pub test_anomalies: usize,
}

impl SplitCounts {
    pub fn test_anomaly_ratio(&self) -> f64 {
        self.test_anomalies as f64 / (self.test_normals + self.test_anomalies) as f64
    }
}

/// Disjoint train/test index sets, both sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitResult {
    pub strategy: SplitStrategy,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub counts: SplitCounts,
}

impl SplitResult {
    fn build(strategy: SplitStrategy, mut train: Vec<usize>, mut test: Vec<usize>, labels: &[bool]) -> Result<Self, SplitError> {
        if train.is_empty() {
            return Err(SplitError::EmptyPartition("train"));
        }
        if test.is_empty() {
            return Err(SplitError::EmptyPartition("test"));
        }
        for v in [&mut train, &mut test] {
            if !v.windows(2).all(|w| w[0] < w[1]) {
                v.sort_unstable();
            }
        }
        let train_anomalies: usize = train.iter().map(|&i| labels[i] as usize).sum();
        let test_anomalies: usize = test.iter().map(|&i| labels[i] as usize).sum();
        let counts = SplitCounts {
            train_normals: train.len() - train_anomalies,
            train_anomalies,
            test_normals: test.len() - test_anomalies,
            test_anomalies,
        };
        Ok(Self {
            strategy,
            train_indices: train,
            test_indices: test,
            counts,
        })
    }
}

fn partition_by_label(labels: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let a = labels.iter().filter(|&&l| l).count();
    let mut normals = vec![0; labels.len() - a + 1];
    let mut anomalies = vec![0; a + 1];
    let (mut p, mut q) = (0, 0);
    for (i, &l) in labels.iter().enumerate() {
        normals[p] = i;
        anomalies[q] = i;
        p += !l as usize;
        q += l as usize;
    }
    normals.truncate(p);
    anomalies.truncate(q);
    (normals, anomalies)
}

/// Merges two ascending index lists.
fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

// Purpose tags for derived random streams.
const STREAM_PARTITION: u64 = 1;
const STREAM_BALANCE: u64 = 2;
const STREAM_CORRUPTION: u64 = 3;

pub fn split(dataset: &TabularDataset, spec: &SplitSpec) -> Result<SplitResult> {
    split_labels(dataset.labels(), spec)
}

/// Splits by labels alone; `split` is this applied to a dataset's labels.
pub fn split_labels(labels: &[bool], spec: &SplitSpec) -> Result<SplitResult> {
    spec.validate()?;
    let n_anomalies = labels.iter().map(|&l| l as usize).sum::<usize>();
    let n_normals = labels.len() - n_anomalies;
    if n_anomalies == 0 || n_normals < 2 {
        return Err(SplitError::TooFewSamples {
            anomalies: n_anomalies,
            normals: n_normals,
        }
        .into());
    }
    let mut rng = SplitMix64::new(derive_seed(spec.seed, STREAM_PARTITION));

    let result = match spec.strategy {
        SplitStrategy::Proposed | SplitStrategy::Recycling => {
            let fraction = if spec.strategy == SplitStrategy::Recycling {
                0.5
            } else {
                spec.normal_train_fraction
            };
            let n_train = (fraction * n_normals as f64).floor() as usize;
            let (train, test) = select_normals(labels, n_normals, n_train, &mut rng);
            SplitResult::build(spec.strategy, train, test, labels)?
        }
        SplitStrategy::Discarding => {
            let (train, test) = halve_rows(labels, &mut rng);
            SplitResult::build(spec.strategy, train, test, labels)?
        }
        SplitStrategy::BalancedTest => {
            let (normals, anomalies) = partition_by_label(labels);
            let (train, held_out) = halve_normals(normals, 0.5, &mut rng);
            if anomalies.len() > held_out.len() {
                return Err(SplitError::NotEnoughNormals {
                    anomalies: anomalies.len(),
                    available: held_out.len(),
                }
                .into());
            }
            let mut balance = SplitMix64::new(derive_seed(spec.seed, STREAM_BALANCE));
            let (test, _) = balance.sample(&held_out, anomalies.len());
            SplitResult::build(spec.strategy, train, merge_sorted(&test, &anomalies), labels)?
        }
        SplitStrategy::AnomalyTrain => {
            let (normals, anomalies) = partition_by_label(labels);
            let (train, test) = rng.sample(&anomalies, anomalies.len() / 2);
            SplitResult::build(spec.strategy, train, merge_sorted(&test, &normals), labels)?
        }
    };

    if spec.corruption_ratio > 0.0 {
        return inject_corruption(&result, labels, spec.corruption_ratio, spec.seed);
    }
    Ok(result)
}

/// One pass over the rows: every anomaly goes to test and `n_train` of the
/// `n_normals` normals are drawn for train by selection sampling. Same
/// draws, same result as `rng.sample` over the normals merged with the
/// anomalies afterwards.
fn select_normals(labels: &[bool], n_normals: usize, n_train: usize, rng: &mut SplitMix64) -> (Vec<usize>, Vec<usize>) {
    let mut train = vec![0; n_train + 1];
    let mut test = vec![0; labels.len() - n_train + 1];
    let (mut seen, mut c, mut t) = (0usize, 0usize, 0usize);
    for (i, &l) in labels.iter().enumerate() {
        if l {
            test[t] = i;
            t += 1;
        } else {
            let take = ((rng.below((n_normals - seen) as u64) as usize) < n_train - c) as usize;
            train[c] = i;
            test[t] = i;
            c += take;
            t += 1 - take;
            seen += 1;
        }
    }
    train.truncate(c);
    test.truncate(t);
    (train, test)
}

/// Draws half the rows; the drawn normals train and the undrawn rows test.
fn halve_rows(labels: &[bool], rng: &mut SplitMix64) -> (Vec<usize>, Vec<usize>) {
    let n = labels.len();
    let k = n / 2;
    let mut train = vec![0; k + 1];
    let mut test = vec![0; n - k + 1];
    let (mut c, mut drawn, mut t) = (0usize, 0usize, 0usize);
    for (i, &l) in labels.iter().enumerate() {
        let take = ((rng.below((n - i) as u64) as usize) < k - drawn) as usize;
        train[c] = i;
        test[t] = i;
        c += take & !l as usize;
        drawn += take;
        t += 1 - take;
    }
    train.truncate(c);
    test.truncate(t);
    (train, test)
}

fn halve_normals(normals: Vec<usize>, fraction: f64, rng: &mut SplitMix64) -> (Vec<usize>, Vec<usize>) {
    let n_train = (fraction * normals.len() as f64).floor() as usize;
    rng.sample(&normals, n_train)
}

/// Moves `round(ratio * total_anomalies)` anomalies from the test set into
/// the training set. They keep their label but detectors never see labels.
pub fn inject_corruption(result: &SplitResult, labels: &[bool], ratio: f64, seed: u64) -> Result<SplitResult> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(SplitError::BadCorruptionRatio(ratio).into());
    }
    if result.strategy != SplitStrategy::Proposed {
        return Err(SplitError::CorruptionNotAllowed.into());
    }
    if ratio == 0.0 {
        return Ok(result.clone());
    }
    let total = labels.iter().map(|&l| l as usize).sum::<usize>();
    let requested = (ratio * total as f64).round() as usize;
    let test_anomalies: Vec<usize> = result.test_indices.iter().copied().filter(|&i| labels[i]).collect();
    if requested == 0 || requested >= test_anomalies.len() {
        return Err(SplitError::CorruptionOutOfRange {
            requested,
            available: test_anomalies.len(),
        }
        .into());
    }
    let mut rng = SplitMix64::new(derive_seed(seed, STREAM_CORRUPTION));
    let (moved, _) = rng.sample(&test_anomalies, requested);

    let train = merge_sorted(&result.train_indices, &moved);
    let mut test = Vec::with_capacity(result.test_indices.len() - moved.len());
    let mut m = moved.iter().peekable();
    for &i in &result.test_indices {
        if m.peek() == Some(&&i) {
            m.next();
        } else {
            test.push(i);
        }
    }
    Ok(SplitResult::build(result.strategy, train, test, labels)?)
}

/// Writes one index per line.
pub fn write_index_list(path: &Path, indices: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(indices.len() * 6);
    for i in indices {
        out.push_str(&i.to_string());
        out.push('\n');
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    f.write_all(out.as_bytes())
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_index_list(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            l.trim().parse::<usize>().map_err(|_| {
                SplitError::BadIndexList {
                    path: path.to_path_buf(),
                    reason: format!("line {}: `{}` is not an index", n + 1, l.trim()),
                }
                .into()
            })
        })
        .collect()
}
