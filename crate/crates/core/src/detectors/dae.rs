//! Deep autoencoder scored by reconstruction error.
//!
//! The encoder tapers `D -> ceil(D/2) -> ceil(D/4) -> latent` and the decoder
//! mirrors it. Hidden layers use ReLU; the code layer and the output are
//! linear. Training minimises the mean squared error with Adam on seeded
//! mini-batches.

use ndarray::{Array2, ArrayView2, NdFloat};
use serde::{Deserialize, Serialize};

use super::blob::{BlobReader, BlobWriter};
use super::nn::{Activation, Adam, Dense, Mlp};
use super::{Detector, Model};
use crate::error::DetectorError;
use crate::rng::{derive_seed, SplitMix64};

const MAGIC: &[u8; 8] = b"ADEVDAE\0";
const VERSION: u32 = 1;

const INIT_STREAM: u64 = 0x11;
const SHUFFLE_STREAM: u64 = 0x12;

/// Arithmetic used for training and scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

/// Stop when the epoch loss has not improved by `min_delta` for `patience`
/// consecutive epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStopping {
    pub patience: usize,
    #[serde(default)]
    pub min_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaeConfig {
    pub latent_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// Encoder hidden widths; the default taper when absent.
    #[serde(default)]
    pub hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub early_stopping: Option<EarlyStopping>,
    #[serde(default)]
    pub precision: Precision,
}

fn default_learning_rate() -> f64 {
    1e-4
}

impl DaeConfig {
    pub fn new(latent_dim: usize, epochs: usize, batch_size: usize) -> Self {
        Self {
            latent_dim,
            epochs,
            batch_size,
            learning_rate: default_learning_rate(),
            hidden: None,
            early_stopping: None,
            precision: Precision::F64,
        }
    }

    /// Layer widths from input to output.
    pub fn layer_dims(&self, input_dim: usize) -> Vec<usize> {
        let hidden = self
            .hidden
            .clone()
            .unwrap_or_else(|| vec![input_dim.div_ceil(2), input_dim.div_ceil(4)]);
        let mut dims = vec![input_dim];
        dims.extend(&hidden);
        dims.push(self.latent_dim);
        dims.extend(hidden.iter().rev());
        dims.push(input_dim);
        dims
    }

    fn activations(n_layers: usize) -> Vec<Activation> {
        // Encoder hidden layers and decoder hidden layers are rectified; the
        // code layer (middle) and the reconstruction (last) are linear.
        let code = n_layers / 2 - 1;
        (0..n_layers)
            .map(|l| {
                if l == code || l == n_layers - 1 {
                    Activation::Identity
                } else {
                    Activation::Relu
                }
            })
            .collect()
    }

    fn validate(&self, n: usize, d: usize) -> Result<(), DetectorError> {
        if n == 0 {
            return Err(DetectorError::EmptyTrainingSet);
        }
        if self.latent_dim == 0 || self.latent_dim >= d {
            return Err(DetectorError::BadLatentDim {
                latent: self.latent_dim,
                input: d,
            });
        }
        if self.batch_size == 0 || self.hidden.as_ref().is_some_and(|h| h.contains(&0)) {
            return Err(DetectorError::BadModel("batch size and layer widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Net {
    F64(Mlp<f64>),
    F32(Mlp<f32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaeModel {
    net: Net,
    /// Mean training loss of each completed epoch.
    loss_history: Vec<f64>,
}

fn to_precision<F: NdFloat>(x: ArrayView2<'_, f64>) -> Array2<F> {
    x.mapv(|v| num_traits::cast(v).unwrap())
}

fn train_net<F: NdFloat>(
    train: ArrayView2<'_, f64>,
    config: &DaeConfig,
    seed: u64,
) -> Result<(Mlp<F>, Vec<f64>), DetectorError> {
    let (n, d) = train.dim();
    let dims = config.layer_dims(d);
    let activations = DaeConfig::activations(dims.len() - 1);
    let mut net = Mlp::<F>::new(&dims, &activations, &mut SplitMix64::new(derive_seed(seed, INIT_STREAM)));
    let mut opt = Adam::new(&net, config.learning_rate);
    let mut order_rng = SplitMix64::new(derive_seed(seed, SHUFFLE_STREAM));
    let data = to_precision::<F>(train);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0;

    for epoch in 0..config.epochs {
        order_rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = data.select(ndarray::Axis(0), chunk);
            let (loss, grads) = net.reconstruction_loss_and_gradients(batch.view());
            let loss = loss.to_f64().unwrap();
            if !loss.is_finite() {
                return Err(DetectorError::NonFiniteLoss { epoch, batch: b });
            }
            opt.step(&mut net, &grads);
            if !net.all_finite() {
                return Err(DetectorError::NonFiniteLoss { epoch, batch: b });
            }
            epoch_loss += loss * chunk.len() as f64;
        }
        let epoch_loss = epoch_loss / n as f64;
        history.push(epoch_loss);
        if let Some(es) = config.early_stopping {
            if epoch_loss < best - es.min_delta {
                best = epoch_loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= es.patience {
                    log::debug!("early stop after epoch {epoch}, loss {epoch_loss:.6e}");
                    break;
                }
            }
        }
    }
    Ok((net, history))
}

fn squared_errors<F: NdFloat>(net: &Mlp<F>, test: ArrayView2<'_, f64>) -> Vec<f64> {
    let x = to_precision::<F>(test);
    let y = net.forward(x.view());
    x.outer_iter()
        .zip(y.outer_iter())
        .map(|(a, b)| {
            a.iter()
                .zip(b.iter())
                .map(|(&u, &v)| {
                    let e = (u - v).to_f64().unwrap();
                    e * e
                })
                .sum()
        })
        .collect()
}

impl DaeModel {
    pub fn train(train: ArrayView2<'_, f64>, config: &DaeConfig, seed: u64) -> Result<Self, DetectorError> {
        config.validate(train.nrows(), train.ncols())?;
        let (net, loss_history) = match config.precision {
            Precision::F64 => {
                let (net, h) = train_net::<f64>(train, config, seed)?;
                (Net::F64(net), h)
            }
            Precision::F32 => {
                let (net, h) = train_net::<f32>(train, config, seed)?;
                (Net::F32(net), h)
            }
        };
        Ok(Self { net, loss_history })
    }

    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.loss_history.last().copied()
    }

    pub fn input_dim(&self) -> usize {
        match &self.net {
            Net::F64(n) => n.input_dim(),
            Net::F32(n) => n.input_dim(),
        }
    }

    /// Per-row sum of squared reconstruction errors.
    pub fn score(&self, test: ArrayView2<'_, f64>) -> Result<Vec<f64>, DetectorError> {
        if test.ncols() != self.input_dim() {
            return Err(DetectorError::DimensionMismatch {
                expected: self.input_dim(),
                got: test.ncols(),
            });
        }
        Ok(match &self.net {
            Net::F64(n) => squared_errors(n, test),
            Net::F32(n) => squared_errors(n, test),
        })
    }

    /// The network in `f64`, whatever precision it was trained in.
    pub fn network(&self) -> Mlp<f64> {
        match &self.net {
            Net::F64(n) => n.clone(),
            Net::F32(n) => Mlp {
                layers: n
                    .layers
                    .iter()
                    .map(|l| Dense {
                        weight: l.weight.mapv(f64::from),
                        bias: l.bias.mapv(f64::from),
                        activation: l.activation,
                    })
                    .collect(),
            },
        }
    }

    pub fn from_network(net: Mlp<f64>) -> Self {
        Self {
            net: Net::F64(net),
            loss_history: Vec::new(),
        }
    }

    /// Layout: precision tag, layer count, then per layer
    /// `inputs, outputs, relu flag, weights (row-major), biases`, then the
    /// loss history. Values are stored as `f64` in either precision.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = BlobWriter::new(MAGIC, VERSION);
        w.u64(match self.net {
            Net::F64(_) => 64,
            Net::F32(_) => 32,
        });
        let net = self.network();
        w.u64(net.layers.len() as u64);
        for l in &net.layers {
            w.u64(l.weight.nrows() as u64);
            w.u64(l.weight.ncols() as u64);
            w.u64((l.activation == Activation::Relu) as u64);
            w.f64s(l.weight.iter().copied());
            w.f64s(l.bias.iter().copied());
        }
        w.u64(self.loss_history.len() as u64);
        w.f64s(self.loss_history.iter().copied());
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DetectorError> {
        let mut r = BlobReader::open(bytes, MAGIC, VERSION)?;
        let precision = r.u64()?;
        let n_layers = r.usize()?;
        let mut layers = Vec::new();
        for _ in 0..n_layers {
            let rows = r.usize()?;
            let cols = r.usize()?;
            let activation = match r.u64()? {
                0 => Activation::Identity,
                1 => Activation::Relu,
                other => return Err(DetectorError::BadModel(format!("unknown activation {other}"))),
            };
            let size = rows
                .checked_mul(cols)
                .ok_or_else(|| DetectorError::BadModel("size overflow".into()))?;
            let weight = Array2::from_shape_vec((rows, cols), r.f64s(size)?)
                .map_err(|e| DetectorError::BadModel(e.to_string()))?;
            let bias = ndarray::Array1::from(r.f64s(cols)?);
            if let Some(prev) = layers.last().map(|l: &Dense<f64>| l.weight.ncols()) {
                if prev != rows {
                    return Err(DetectorError::BadModel("layer shapes do not chain".into()));
                }
            }
            layers.push(Dense {
                weight,
                bias,
                activation,
            });
        }
        if layers.is_empty() {
            return Err(DetectorError::BadModel("no layers".into()));
        }
        let n_hist = r.usize()?;
        let loss_history = r.f64s(n_hist)?;
        r.finish()?;
        let net = Mlp { layers };
        let net = match precision {
            64 => Net::F64(net),
            32 => Net::F32(Mlp {
                layers: net
                    .layers
                    .into_iter()
                    .map(|l| Dense {
                        weight: l.weight.mapv(|v| v as f32),
                        bias: l.bias.mapv(|v| v as f32),
                        activation: l.activation,
                    })
                    .collect(),
            }),
            other => return Err(DetectorError::BadModel(format!("unknown precision tag {other}"))),
        };
        Ok(Self { net, loss_history })
    }
}

impl Detector for DaeConfig {
    fn name(&self) -> String {
        "DAE".into()
    }

    fn fit(&self, train: ArrayView2<'_, f64>, seed: u64) -> Result<Box<dyn Model>, DetectorError> {
        Ok(Box::new(DaeModel::train(train, self, seed)?))
    }
}

impl Model for DaeModel {
    fn score(&self, test: ArrayView2<'_, f64>) -> Result<Vec<f64>, DetectorError> {
        DaeModel::score(self, test)
    }

    fn final_loss(&self) -> Option<f64> {
        DaeModel::final_loss(self)
    }

    fn to_bytes(&self) -> Vec<u8> {
        DaeModel::to_bytes(self)
    }
}
