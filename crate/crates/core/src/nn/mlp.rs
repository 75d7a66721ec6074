use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ops::{axpy, dot};
use super::params::{Gradients, Init, ParamId, ParamStore};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

/// Fully connected stack: `affine -> act -> dropout -> ... -> affine`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    pub activation: Activation,
    pub dropout: f64,
}

impl MlpSpec {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Self {
        MlpSpec {
            input,
            hidden: hidden.to_vec(),
            output,
            activation: Activation::Relu,
            dropout: 0.0,
        }
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout = rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.output == 0 || self.hidden.contains(&0) {
            return Err(Error::Config(format!("MLP widths must be >= 1: {self:?}")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input);
        w.extend_from_slice(&self.hidden);
        w.push(self.output);
        w
    }
}

/// Affine map `y = W x + b` with `W` stored row-major as `output x input`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        rng: &mut R,
    ) -> Self {
        let weight = store.add(
            format!("{name}.weight"),
            &[output, input],
            Init::FanIn(input),
            rng,
        );
        let bias = store.add(format!("{name}.bias"), &[output], Init::Zeros, rng);
        Linear {
            weight,
            bias,
            input,
            output,
        }
    }

    pub fn forward(&self, store: &ParamStore, x: &[f64]) -> Vec<f64> {
        let w = store.value(self.weight);
        let b = store.value(self.bias);
        w.chunks_exact(self.input)
            .zip(b)
            .map(|(row, bi)| dot(row, x) + bi)
            .collect()
    }

    /// Accumulates weight and bias gradients and returns `W^T dy`.
    pub fn backward(
        &self,
        store: &ParamStore,
        x: &[f64],
        dy: &[f64],
        grads: &mut Gradients,
    ) -> Vec<f64> {
        {
            let gw = grads.get_mut(self.weight);
            for (row, &d) in gw.chunks_exact_mut(self.input).zip(dy) {
                if d != 0.0 {
                    axpy(d, x, row);
                }
            }
        }
        for (gb, d) in grads.get_mut(self.bias).iter_mut().zip(dy) {
            *gb += d;
        }
        let w = store.value(self.weight);
        let mut dx = vec![0.0; self.input];
        for (row, &d) in w.chunks_exact(self.input).zip(dy) {
            if d != 0.0 {
                axpy(d, row, &mut dx);
            }
        }
        dx
    }
}

#[derive(Clone, Debug)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Linear>,
}

/// Intermediates from one forward pass. Consumed by [`Mlp::backward`].
#[derive(Debug)]
pub struct MlpCache {
    /// Input to each affine layer.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Vec<f64>>,
    /// Inverted-dropout multipliers per hidden layer (empty when inactive).
    masks: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(
        spec: MlpSpec,
        store: &mut ParamStore,
        name: &str,
        rng: &mut R,
    ) -> Result<Self> {
        spec.validate()?;
        let widths = spec.widths();
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(store, &format!("{name}.{i}"), w[0], w[1], rng))
            .collect();
        Ok(Mlp { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    /// Dropout is applied only when `dropout_rng` is given (train mode).
    pub fn forward<R: Rng + ?Sized>(
        &self,
        store: &ParamStore,
        input: &[f64],
        mut dropout_rng: Option<&mut R>,
    ) -> Result<(Vec<f64>, MlpCache)> {
        if input.len() != self.spec.input {
            return Err(Error::Shape(format!(
                "MLP expects input width {}, got {}",
                self.spec.input,
                input.len()
            )));
        }
        let n_hidden = self.layers.len() - 1;
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(n_hidden),
            masks: Vec::with_capacity(n_hidden),
        };
        let mut x = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(store, &x);
            cache.inputs.push(x);
            if i == n_hidden {
                return Ok((z, cache));
            }
            let mut h: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
            let p = self.spec.dropout;
            let mask = match dropout_rng.as_deref_mut() {
                Some(rng) if p > 0.0 => {
                    let keep = 1.0 / (1.0 - p);
                    let mask: Vec<f64> = (0..h.len())
                        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
                        .collect();
                    for (v, m) in h.iter_mut().zip(&mask) {
                        *v *= m;
                    }
                    mask
                }
                _ => Vec::new(),
            };
            cache.pre.push(z);
            cache.masks.push(mask);
            x = h;
        }
        unreachable!("an MLP always has an output layer")
    }

    /// Backpropagates `output_grad`, accumulating into `grads`; returns the
    /// gradient with respect to the input.
    pub fn backward(
        &self,
        store: &ParamStore,
        cache: MlpCache,
        output_grad: &[f64],
        grads: &mut Gradients,
    ) -> Vec<f64> {
        let mut dy = output_grad.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let mut dx = layer.backward(store, &cache.inputs[i], &dy, grads);
            if i == 0 {
                return dx;
            }
            let h = i - 1;
            let mask = &cache.masks[h];
            for (j, d) in dx.iter_mut().enumerate() {
                if cache.pre[h][j] <= 0.0 {
                    *d = 0.0;
                } else if !mask.is_empty() {
                    *d *= mask[j];
                }
            }
            dy = dx;
        }
        unreachable!("an MLP always has an input layer")
    }
}
