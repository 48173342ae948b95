//! Dense feedforward networks with batched forward and reverse-mode backward passes.

use std::fmt;
use std::path::Path;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::init::{fan_in_uniform, orthogonal};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(T::zero()),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    pub fn derivative_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Tanh => T::one() - y * y,
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Identity => T::one(),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
    }
}

/// Fully connected layer `y = act(W x + b)` with `W` stored as (outputs, inputs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Dense<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
    pub activation: Activation,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }

    fn forward(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut z = x.dot(&self.weight.t());
        let act = self.activation;
        z += &self.bias;
        if act != Activation::Identity {
            z.mapv_inplace(|v| act.apply(v));
        }
        z
    }
}

/// Layer inputs recorded by [`Mlp::forward_cached`]; `activations[0]` is the network input
/// and the last entry is the network output.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    pub activations: Vec<Array2<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn output(&self) -> &Array2<T> {
        self.activations.last().expect("cache holds at least the input")
    }
}

/// Parameter gradients laid out like the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array1<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(net: &Mlp<T>) -> Self {
        Self {
            weights: net.layers.iter().map(|l| Array2::zeros(l.weight.raw_dim())).collect(),
            biases: net.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    /// Weight then bias of each layer, matching [`Mlp::param_slices_mut`].
    pub fn slices(&self) -> Vec<&[T]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| {
                [
                    w.as_slice().expect("standard layout"),
                    b.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [T]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| {
                [
                    w.as_slice_mut().expect("standard layout"),
                    b.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }
}

/// Multilayer perceptron.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Mlp<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> Mlp<T> {
    pub fn new(layers: Vec<Dense<T>>) -> Result<Self> {
        let net = Self { layers };
        net.validate()?;
        Ok(net)
    }

    /// Zero-initialized network with layer widths `sizes` (input first). The last
    /// layer is linear, the others use `hidden`.
    pub fn zeros(sizes: &[usize], hidden: Activation) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Config(format!(
                "an MLP needs at least input and output sizes, got {sizes:?}"
            )));
        }
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last { Activation::Identity } else { hidden };
                Dense::zeros(w[0], w[1], act)
            })
            .collect();
        Self::new(layers)
    }

    /// Orthogonal weights scaled by `hidden_gain` for hidden layers and `output_gain`
    /// for the output layer; zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        hidden_gain: f64,
        output_gain: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(sizes, hidden)?;
        let last = net.layers.len() - 1;
        for (i, layer) in net.layers.iter_mut().enumerate() {
            let gain = if i == last { output_gain } else { hidden_gain };
            layer.weight = orthogonal(layer.outputs(), layer.inputs(), gain, rng);
        }
        Ok(net)
    }

    /// Weights uniform in `±1/sqrt(fan_in)`; zero biases.
    pub fn fan_in_uniform<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(sizes, hidden)?;
        for layer in &mut net.layers {
            layer.weight = fan_in_uniform(layer.outputs(), layer.inputs(), rng);
        }
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("an MLP needs at least one layer".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(Error::shape(
                    format!("layer {i} bias of length {}", l.outputs()),
                    l.bias.len(),
                ));
            }
            if i > 0 && self.layers[i - 1].outputs() != l.inputs() {
                return Err(Error::shape(
                    format!("layer {i} input width {}", self.layers[i - 1].outputs()),
                    l.inputs(),
                ));
            }
            let finite = l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite());
            if !finite {
                return Err(Error::Config(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    /// Layer widths, input first.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Dense::outputs))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &ArrayView2<T>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(
                format!("input width {}", self.input_dim()),
                x.ncols(),
            ));
        }
        Ok(())
    }

    /// Batched forward pass; rows of `x` are samples.
    pub fn forward(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_input(&x)?;
        let mut h = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            h = layer.forward(h.view());
        }
        Ok(h)
    }

    /// Forward pass of a single sample.
    pub fn forward_one(&self, x: &[T]) -> Result<Vec<T>> {
        let view = ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::Usage(e.to_string()))?;
        Ok(self.forward(view)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_cached(&self, x: ArrayView2<T>) -> Result<ForwardCache<T>> {
        self.check_input(&x)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        for layer in &self.layers {
            let h = layer.forward(activations.last().expect("non-empty").view());
            activations.push(h);
        }
        Ok(ForwardCache { activations })
    }

    /// Gradients of a scalar loss given `grad_output = dL/d(output)` for the batch in
    /// `cache`. Returns parameter gradients and `dL/d(input)`.
    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        grad_output: ArrayView2<T>,
    ) -> Result<(Gradients<T>, Array2<T>)> {
        if cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::shape(
                format!("cache of {} activations", self.layers.len() + 1),
                cache.activations.len(),
            ));
        }
        let out = cache.output();
        if grad_output.dim() != out.dim() {
            return Err(Error::shape(
                format!("output gradient {:?}", out.dim()),
                format!("{:?}", grad_output.dim()),
            ));
        }
        let mut weights = Vec::with_capacity(self.layers.len());
        let mut biases = Vec::with_capacity(self.layers.len());
        let mut grad = grad_output.to_owned();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let y = &cache.activations[i + 1];
            let act = layer.activation;
            if act != Activation::Identity {
                Zip::from(&mut grad)
                    .and(y)
                    .for_each(|g, &y| *g *= act.derivative_from_output(y));
            }
            let input = &cache.activations[i];
            let mut gw = Array2::zeros(layer.weight.raw_dim());
            general_mat_mul(T::one(), &grad.t(), input, T::zero(), &mut gw);
            weights.push(gw);
            biases.push(grad.sum_axis(Axis(0)));
            grad = grad.dot(&layer.weight);
        }
        weights.reverse();
        biases.reverse();
        Ok((Gradients { weights, biases }, grad))
    }

    /// `dL/d(input)` only, skipping the parameter gradients.
    pub fn backward_input(&self, cache: &ForwardCache<T>, grad_output: ArrayView2<T>) -> Result<Array2<T>> {
        let out = cache.output();
        if cache.activations.len() != self.layers.len() + 1 || grad_output.dim() != out.dim() {
            return Err(Error::shape(
                format!("output gradient {:?}", out.dim()),
                format!("{:?}", grad_output.dim()),
            ));
        }
        let mut grad = grad_output.to_owned();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.activation;
            if act != Activation::Identity {
                Zip::from(&mut grad)
                    .and(&cache.activations[i + 1])
                    .for_each(|g, &y| *g *= act.derivative_from_output(y));
            }
            grad = grad.dot(&layer.weight);
        }
        Ok(grad)
    }

    /// Weight then bias of each layer.
    pub fn param_slices(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn flat_params(&self) -> Vec<T> {
        self.param_slices().concat()
    }

    pub fn set_flat_params(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::shape(format!("{} parameters", self.num_params()), flat.len()));
        }
        let mut offset = 0;
        for s in self.param_slices_mut() {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        }
        Ok(())
    }

    /// `self <- tau * source + (1 - tau) * self`.
    pub fn polyak_from(&mut self, source: &Self, tau: T) -> Result<()> {
        if self.sizes() != source.sizes() {
            return Err(Error::shape(format!("{:?}", self.sizes()), format!("{:?}", source.sizes())));
        }
        let keep = T::one() - tau;
        for (dst, src) in self.param_slices_mut().into_iter().zip(source.param_slices()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = tau * s + keep * *d;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let net: Self = serde_json::from_str(json)?;
        net.validate()?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
