//! Local outlier factor in novelty mode: densities are estimated on the
//! training rows only, and test rows are scored against them.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blob::{BlobReader, BlobWriter};
use super::{Detector, Model};
use crate::error::DetectorError;

/// Lower bound on a reachability distance. Without it, `k` or more
/// coincident points give an infinite density.
pub const REACH_FLOOR: f64 = 1e-12;

const MAGIC: &[u8; 8] = b"ADEVLOF\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LofConfig {
    #[serde(rename = "k", alias = "n_neighbors")]
    pub k: usize,
}

impl LofConfig {
    pub fn new(k: usize) -> Self {
        Self { k }
    }
}

#[derive(Debug, Clone)]
pub struct LofModel {
    train: Array2<f64>,
    k: usize,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
}

#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k` nearest training rows to `query`, plus every further row tied
/// with the `k`-th distance, sorted by (distance, index). `exclude` removes
/// the query's own row when it is a training point.
fn neighbourhood(train: &Array2<f64>, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<(f64, usize)> {
    let mut d: Vec<(f64, usize)> = train
        .outer_iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != exclude)
        .map(|(j, row)| (euclidean(query, row.as_slice().unwrap()), j))
        .collect();
    d.select_nth_unstable_by(k - 1, by_distance_then_index);
    let kth = d[k - 1].0;
    let (head, tail) = d.split_at_mut(k);
    let mut hood: Vec<(f64, usize)> = head.to_vec();
    hood.extend(tail.iter().filter(|p| p.0 == kth));
    hood.sort_unstable_by(by_distance_then_index);
    hood
}

/// Mean reachability distance from a point to its neighbourhood.
fn mean_reach(hood: &[(f64, usize)], k_distance: &[f64]) -> f64 {
    let total: f64 = hood.iter().map(|&(d, o)| d.max(k_distance[o]).max(REACH_FLOOR)).sum();
    total / hood.len() as f64
}

fn mean_lrd(hood: &[(f64, usize)], lrd: &[f64]) -> f64 {
    hood.iter().map(|&(_, o)| lrd[o]).sum::<f64>() / hood.len() as f64
}

impl LofModel {
    pub fn fit(train: ArrayView2<'_, f64>, k: usize) -> Result<Self, DetectorError> {
        let n = train.nrows();
        if n == 0 {
            return Err(DetectorError::EmptyTrainingSet);
        }
        if k == 0 || k >= n {
            return Err(DetectorError::BadNeighbourCount { k, n });
        }
        let train = train.as_standard_layout().into_owned();
        let first = train.row(0);
        if train.outer_iter().all(|r| r == first) {
            return Err(DetectorError::DegenerateTrainingSet);
        }

        let hoods: Vec<Vec<(f64, usize)>> = (0..n)
            .into_par_iter()
            .map(|i| neighbourhood(&train, train.row(i).as_slice().unwrap(), k, Some(i)))
            .collect();
        let k_distance: Vec<f64> = hoods.iter().map(|h| h[k - 1].0).collect();
        let lrd: Vec<f64> = hoods.par_iter().map(|h| 1.0 / mean_reach(h, &k_distance)).collect();
        Ok(Self {
            train,
            k,
            k_distance,
            lrd,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_features(&self) -> usize {
        self.train.ncols()
    }

    pub fn k_distances(&self) -> &[f64] {
        &self.k_distance
    }

    pub fn local_reachability_densities(&self) -> &[f64] {
        &self.lrd
    }

    /// LOF of a training row with itself excluded from its neighbourhood.
    pub fn self_scores(&self) -> Vec<f64> {
        (0..self.train.nrows())
            .into_par_iter()
            .map(|i| {
                let hood = neighbourhood(&self.train, self.train.row(i).as_slice().unwrap(), self.k, Some(i));
                mean_lrd(&hood, &self.lrd) / self.lrd[i]
            })
            .collect()
    }

    /// `mean lrd(o) / lrd(x)` over the training neighbourhood of each row.
    pub fn score(&self, test: ArrayView2<'_, f64>) -> Result<Vec<f64>, DetectorError> {
        if test.ncols() != self.train.ncols() {
            return Err(DetectorError::DimensionMismatch {
                expected: self.train.ncols(),
                got: test.ncols(),
            });
        }
        let test = test.as_standard_layout();
        Ok((0..test.nrows())
            .into_par_iter()
            .map(|i| {
                let hood = neighbourhood(&self.train, test.row(i).as_slice().unwrap(), self.k, None);
                let lrd_x = 1.0 / mean_reach(&hood, &self.k_distance);
                mean_lrd(&hood, &self.lrd) / lrd_x
            })
            .collect())
    }

    /// Stores `k` and the training rows; densities are recomputed on load.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = BlobWriter::new(MAGIC, VERSION);
        w.u64(self.k as u64);
        w.u64(self.train.nrows() as u64);
        w.u64(self.train.ncols() as u64);
        w.f64s(self.train.iter().copied());
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DetectorError> {
        let mut r = BlobReader::open(bytes, MAGIC, VERSION)?;
        let k = r.usize()?;
        let n = r.usize()?;
        let d = r.usize()?;
        let values = r.f64s(n.checked_mul(d).ok_or_else(|| DetectorError::BadModel("size overflow".into()))?)?;
        r.finish()?;
        let train = Array2::from_shape_vec((n, d), values).map_err(|e| DetectorError::BadModel(e.to_string()))?;
        Self::fit(train.view(), k)
    }
}

impl Detector for LofConfig {
    fn name(&self) -> String {
        "LOF".into()
    }

    fn fit(&self, train: ArrayView2<'_, f64>, _seed: u64) -> Result<Box<dyn Model>, DetectorError> {
        Ok(Box::new(LofModel::fit(train, self.k)?))
    }
}

impl Model for LofModel {
    fn score(&self, test: ArrayView2<'_, f64>) -> Result<Vec<f64>, DetectorError> {
        LofModel::score(self, test)
    }

    fn to_bytes(&self) -> Vec<u8> {
        LofModel::to_bytes(self)
    }
}
