//! Dense feed-forward networks with hand-written reverse-mode gradients.
//!
//! Batches are row-major: one sample per row. Gradients returned by
//! [`Mlp::backward`] are sums over the batch, so callers scale the output
//! gradient by `1/n` for mean losses.

mod adam;
mod checkpoint;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adam::OptimizerState;
pub use checkpoint::{load_mlp, save_mlp, MLP_FORMAT, MLP_FORMAT_VERSION};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => z.clone(),
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Tanh => z.mapv(f64::tanh),
        }
    }

    fn apply_inplace(self, z: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
        }
    }

    /// Multiply `grad` in place by the derivative evaluated at pre-activation `z`.
    fn backprop(self, z: &Array2<f64>, grad: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => Zip::from(grad).and(z).for_each(|g, &z| {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }),
            Activation::Tanh => Zip::from(grad).and(z).for_each(|g, &z| {
                let t = z.tanh();
                *g *= 1.0 - t * t;
            }),
        }
    }
}

/// One affine layer, `y = W·x + b` with `W` shaped `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            biases: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    fn same_shape(&self, other: &Dense) -> bool {
        self.weights.dim() == other.weights.dim() && self.biases.len() == other.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
    hidden: Activation,
    output: Activation,
}

/// Values saved by [`Mlp::forward_batch`] for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

/// Parameter gradients, one [`Dense`] per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.weights *= k;
            l.biases *= k;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights
                .iter()
                .chain(l.biases.iter())
                .all(|v| v.is_finite())
        })
    }

    /// Flattened in the same order as [`Mlp::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }
}

fn flatten_layers(layers: &[Dense]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend(l.weights.iter().copied());
        out.extend(l.biases.iter().copied());
    }
    out
}

/// Glorot-uniform bound `√(6/(fan_in+fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl Mlp {
    /// Glorot-uniform weights, zero biases, drawn from `rng`.
    pub fn init<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Argument(format!(
                "a network needs at least 2 layer sizes, got {}",
                sizes.len()
            )));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Argument(format!("layer {i} has zero width")));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = glorot_bound(w[0], w[1]);
                Dense {
                    weights: Array2::from_shape_fn((w[1], w[0]), |_| {
                        rng.random_range(-bound..=bound)
                    }),
                    biases: Array1::zeros(w[1]),
                }
            })
            .collect();
        Ok(Self {
            layers,
            hidden,
            output,
        })
    }

    /// Deterministic initialization from a seed.
    pub fn seeded(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = crate::rng::stream(seed, &[0x4D4C50]);
        Self::init(sizes, hidden, output, &mut rng)
    }

    pub fn from_layers(layers: Vec<Dense>, hidden: Activation, output: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Argument("a network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.inputs() == 0 || l.outputs() == 0 || l.biases.len() != l.outputs() {
                return Err(Error::Argument(format!("layer {i} has inconsistent shape")));
            }
            if i > 0 && layers[i - 1].outputs() != l.inputs() {
                return Err(Error::Argument(format!(
                    "layer {i} expects {} inputs but layer {} emits {}",
                    l.inputs(),
                    i - 1,
                    layers[i - 1].outputs()
                )));
            }
            if !l
                .weights
                .iter()
                .chain(l.biases.iter())
                .all(|v| v.is_finite())
            {
                return Err(Error::Argument(format!(
                    "layer {i} has non-finite parameters"
                )));
            }
        }
        Ok(Self {
            layers,
            hidden,
            output,
        })
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs()];
        s.extend(self.layers.iter().map(Dense::outputs));
        s
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::Argument(format!(
                "network expects {} inputs, got {cols}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Forward pass without keeping intermediates.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let mut a = x.to_owned();
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = a.dot(&l.weights.t());
            z += &l.biases;
            self.activation(i).apply_inplace(&mut z);
            a = z;
        }
        Ok(a)
    }

    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, Cache)> {
        self.check_input(x.ncols())?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = a.dot(&l.weights.t());
            z += &l.biases;
            let next = self.activation(i).apply(&z);
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Ok((
            a,
            Cache {
                inputs,
                pre_activations: pre,
            },
        ))
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Cache)> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        let (y, cache) = self.forward_batch(view)?;
        Ok((y.into_raw_vec_and_offset().0, cache))
    }

    /// Gradients of the summed loss with respect to every parameter and the input.
    pub fn backward(&self, cache: &Cache, dy: ArrayView2<f64>) -> Result<(Gradients, Array2<f64>)> {
        let n = self.layers.len();
        let rows = cache.inputs.first().map_or(0, |a| a.nrows());
        let stale = cache.inputs.len() != n
            || cache.pre_activations.len() != n
            || cache
                .inputs
                .iter()
                .zip(&self.layers)
                .any(|(a, l)| a.ncols() != l.inputs() || a.nrows() != rows);
        if stale {
            return Err(Error::Usage("cache does not match this network".into()));
        }
        if dy.dim() != (rows, self.output_dim()) {
            return Err(Error::Usage(format!(
                "output gradient has shape {:?}, expected ({rows}, {})",
                dy.dim(),
                self.output_dim()
            )));
        }
        let mut grads = Vec::with_capacity(n);
        let mut g = dy.to_owned();
        for i in (0..n).rev() {
            let l = &self.layers[i];
            self.activation(i)
                .backprop(&cache.pre_activations[i], &mut g);
            let dw = g.t().dot(&cache.inputs[i]);
            let db = g.sum_axis(Axis(0));
            let dx = g.dot(&l.weights);
            grads.push(Dense {
                weights: dw,
                biases: db,
            });
            g = dx;
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, g))
    }

    pub fn backward_single(&self, cache: &Cache, dy: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let view =
            ArrayView2::from_shape((1, dy.len()), dy).map_err(|e| Error::Usage(e.to_string()))?;
        let (g, dx) = self.backward(cache, view)?;
        Ok((g, dx.into_raw_vec_and_offset().0))
    }

    pub fn flat_params(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        let count: usize = self
            .layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum();
        if values.len() != count {
            return Err(Error::Argument(format!(
                "expected {count} parameters, got {}",
                values.len()
            )));
        }
        let mut it = values.iter().copied();
        for l in &mut self.layers {
            l.weights
                .iter_mut()
                .chain(l.biases.iter_mut())
                .for_each(|p| *p = it.next().unwrap());
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.same_shape(b))
    }

    /// `target ← τ·self + (1−τ)·target`.
    pub fn soft_update_into(&self, target: &mut Mlp, tau: f64) -> Result<()> {
        if !self.same_shape(target) {
            return Err(Error::Usage(
                "soft update between networks of different shapes".into(),
            ));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Argument(format!(
                "tau must lie in [0, 1], got {tau}"
            )));
        }
        for (src, dst) in self.layers.iter().zip(&mut target.layers) {
            Zip::from(&mut dst.weights)
                .and(&src.weights)
                .for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
            Zip::from(&mut dst.biases)
                .and(&src.biases)
                .for_each(|t, &o| *t = tau * o + (1.0 - tau) * *t);
        }
        Ok(())
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }
}
