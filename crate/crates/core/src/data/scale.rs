use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Per-column min/max statistics for min-max scaling.
///
/// Constant columns (max == min) scale to zero and descale back to their
/// stored value, so the round trip is exact for them as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(features: ArrayView2<'_, f64>) -> Self {
        let mut mins = vec![f64::INFINITY; features.ncols()];
        let mut maxs = vec![f64::NEG_INFINITY; features.ncols()];
        for row in features.axis_iter(Axis(0)) {
            for (j, &v) in row.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        if features.nrows() == 0 {
            mins.fill(0.0);
            maxs.fill(0.0);
        }
        Self { mins, maxs }
    }

    pub fn n_features(&self) -> usize {
        self.mins.len()
    }

    pub fn transform(&self, features: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = features.to_owned();
        for mut row in out.axis_iter_mut(Axis(0)) {
            for (j, v) in row.iter_mut().enumerate() {
                let range = self.maxs[j] - self.mins[j];
                *v = if range > 0.0 {
                    // Clamp guards against rounding just outside [0, 1].
                    ((*v - self.mins[j]) / range).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
        }
        out
    }

    pub fn inverse_transform(&self, scaled: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = scaled.to_owned();
        for mut row in out.axis_iter_mut(Axis(0)) {
            for (j, v) in row.iter_mut().enumerate() {
                let range = self.maxs[j] - self.mins[j];
                *v = if range > 0.0 {
                    self.mins[j] + *v * range
                } else {
                    self.mins[j]
                };
            }
        }
        out
    }
}

/// Scales every column to `[0, 1]` with `(x - min) / (max - min)`.
///
/// One-hot columns already span `{0, 1}` and come back unchanged; constant
/// columns become all zeros.
pub fn minmax_scale(features: ArrayView2<'_, f64>) -> (Array2<f64>, MinMaxScaler) {
    let scaler = MinMaxScaler::fit(features);
    (scaler.transform(features), scaler)
}
