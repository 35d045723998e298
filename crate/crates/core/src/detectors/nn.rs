//! A small multilayer perceptron with hand-written reverse-mode gradients
//! and an Adam optimiser.
//!
//! The forward pass keeps every layer's output; the backward pass walks the
//! layers in reverse, turning the upstream gradient `dA` into
//! `dZ = dA * act'(Z)`, `dW = A_prev^T dZ`, `db = sum_rows(dZ)` and
//! `dA_prev = dZ W^T`.

use ndarray::{Array1, Array2, ArrayView2, Axis, NdFloat, Zip};

use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<F> {
    /// `inputs x outputs`, so a batch is propagated as `X W + b`.
    pub weight: Array2<F>,
    pub bias: Array1<F>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<F> {
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F> {
    pub layers: Vec<Dense<F>>,
}

fn cast<F: NdFloat>(v: f64) -> F {
    num_traits::cast(v).unwrap()
}

impl<F: NdFloat> Mlp<F> {
    /// Layers of widths `dims[0] -> dims[1] -> ...`, initialised like a
    /// default PyTorch `Linear`: weights and biases uniform in
    /// `+-1/sqrt(fan_in)`.
    pub fn new(dims: &[usize], activations: &[Activation], rng: &mut SplitMix64) -> Self {
        assert_eq!(dims.len(), activations.len() + 1);
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let mut draw = || cast::<F>((2.0 * rng.next_f64() - 1.0) * bound);
                let weight = Array2::from_shape_simple_fn((fan_in, fan_out), &mut draw);
                let bias = Array1::from_shape_simple_fn(fan_out, &mut draw);
                Dense {
                    weight,
                    bias,
                    activation,
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weight.ncols()
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Outputs of every layer, input first.
    fn forward_all(&self, x: ArrayView2<'_, F>) -> Vec<Array2<F>> {
        let mut outs = Vec::with_capacity(self.layers.len() + 1);
        outs.push(x.to_owned());
        for layer in &self.layers {
            let mut z = outs.last().unwrap().dot(&layer.weight);
            z += &layer.bias;
            if layer.activation == Activation::Relu {
                z.mapv_inplace(|v| if v > F::zero() { v } else { F::zero() });
            }
            outs.push(z);
        }
        outs
    }

    pub fn forward(&self, x: ArrayView2<'_, F>) -> Array2<F> {
        self.forward_all(x).pop().unwrap()
    }

    /// Mean squared reconstruction error over every element of the batch,
    /// with its gradient for each layer.
    pub fn reconstruction_loss_and_gradients(&self, x: ArrayView2<'_, F>) -> (F, Vec<Gradients<F>>) {
        let outs = self.forward_all(x);
        let y = outs.last().unwrap();
        let n = cast::<F>((x.nrows() * x.ncols()) as f64);
        let mut diff = y - &x;
        let loss = diff.iter().fold(F::zero(), |acc, &d| acc + d * d) / n;

        let two_over_n = cast::<F>(2.0) / n;
        diff.mapv_inplace(|d| d * two_over_n);
        let mut upstream = diff;
        let mut grads = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            if layer.activation == Activation::Relu {
                // ReLU outputs are zero exactly where the derivative is zero.
                Zip::from(&mut upstream).and(&outs[l + 1]).for_each(|g, &a| {
                    if a <= F::zero() {
                        *g = F::zero();
                    }
                });
            }
            let prev = &outs[l];
            let weight = prev.t().dot(&upstream).as_standard_layout().into_owned();
            let bias = upstream.sum_axis(Axis(0));
            if l > 0 {
                upstream = upstream.dot(&layer.weight.t());
            }
            grads.push(Gradients { weight, bias });
        }
        grads.reverse();
        (loss, grads)
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite()))
    }
}

/// Adam with bias correction, as in PyTorch with zero weight decay.
#[derive(Debug, Clone)]
pub struct Adam<F> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: i32,
    m: Vec<Gradients<F>>,
    v: Vec<Gradients<F>>,
}

impl<F: NdFloat> Adam<F> {
    pub fn new(net: &Mlp<F>, learning_rate: f64) -> Self {
        let zeros: Vec<Gradients<F>> = net
            .layers
            .iter()
            .map(|l| Gradients {
                weight: Array2::zeros(l.weight.raw_dim()),
                bias: Array1::zeros(l.bias.raw_dim()),
            })
            .collect();
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, net: &mut Mlp<F>, grads: &[Gradients<F>]) {
        self.step += 1;
        let b1 = cast::<F>(self.beta1);
        let b2 = cast::<F>(self.beta2);
        let one = F::one();
        let correction1 = cast::<F>(1.0 - self.beta1.powi(self.step));
        let correction2_sqrt = cast::<F>((1.0 - self.beta2.powi(self.step)).sqrt());
        let step_size = cast::<F>(self.learning_rate) / correction1;
        let eps = cast::<F>(self.epsilon);
        let update = |p: &mut [F], g: &[F], m: &mut [F], v: &mut [F]| {
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                *p -= step_size * *m / (v.sqrt() / correction2_sqrt + eps);
            }
        };
        for (((layer, g), m), v) in net.layers.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            update(
                layer.weight.as_slice_mut().unwrap(),
                g.weight.as_slice().unwrap(),
                m.weight.as_slice_mut().unwrap(),
                v.weight.as_slice_mut().unwrap(),
            );
            update(
                layer.bias.as_slice_mut().unwrap(),
                g.bias.as_slice().unwrap(),
                m.bias.as_slice_mut().unwrap(),
                v.bias.as_slice_mut().unwrap(),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn init_bounds_follow_fan_in() {
        let mut rng = SplitMix64::new(3);
        let net: Mlp<f64> = Mlp::new(&[16, 4, 16], &[Activation::Relu, Activation::Identity], &mut rng);
        assert!(net.layers[0].weight.iter().all(|w: &f64| w.abs() <= 0.25));
        assert!(net.layers[1].weight.iter().all(|w: &f64| w.abs() <= 0.5));
        assert!(net.layers[0].weight.iter().any(|w: &f64| w.abs() > 0.2));
        assert_eq!(net.n_parameters(), 16 * 4 + 4 + 4 * 16 + 16);
    }

    #[test]
    fn single_linear_layer_gradient_closed_form() {
        // y = x w + b with one input and output: L = mean((xw + b - x)^2).
        let net = Mlp {
            layers: vec![Dense {
                weight: array![[2.0]],
                bias: array![1.0],
                activation: Activation::Identity,
            }],
        };
        let x = array![[1.0], [3.0]];
        let (loss, g) = net.reconstruction_loss_and_gradients(x.view());
        // Residuals r = x + 1 = [2, 4].
        assert_eq!(loss, (4.0 + 16.0) / 2.0);
        assert_eq!(g[0].weight[[0, 0]], (2.0 * 2.0 * 1.0 + 2.0 * 4.0 * 3.0) / 2.0);
        assert_eq!(g[0].bias[0], (2.0 * 2.0 + 2.0 * 4.0) / 2.0);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut net: Mlp<f64> = Mlp {
            layers: vec![Dense {
                weight: array![[0.0, 0.0]],
                bias: array![0.0, 0.0],
                activation: Activation::Identity,
            }],
        };
        let mut opt = Adam::new(&net, 0.1);
        let g = vec![Gradients {
            weight: array![[3.0, -0.5]],
            bias: array![0.0, 1e-3],
        }];
        opt.step(&mut net, &g);
        // With bias correction the first update is lr * g / (|g| + eps).
        assert!((net.layers[0].weight[[0, 0]] + 0.1).abs() < 1e-8);
        assert!((net.layers[0].weight[[0, 1]] - 0.1).abs() < 1e-8);
        assert_eq!(net.layers[0].bias[0], 0.0);
        assert!((net.layers[0].bias[1] + 0.1).abs() < 1e-5);
    }
}
