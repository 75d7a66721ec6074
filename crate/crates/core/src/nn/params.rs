use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Initial values for a new parameter.
#[derive(Clone, Copy, Debug)]
pub enum Init {
    Zeros,
    Constant(f64),
    /// Uniform in `±sqrt(1 / fan_in)`.
    FanIn(usize),
}

/// Gradient buffers laid out like the parameters of a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    bufs: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.bufs[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.bufs[id.0]
    }

    pub fn zero(&mut self) {
        for b in &mut self.bufs {
            b.fill(0.0);
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.bufs.iter_mut().zip(&other.bufs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for b in &mut self.bufs {
            for x in b.iter_mut() {
                *x *= factor;
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.bufs
            .iter()
            .flat_map(|b| b.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn buffers(&self) -> impl Iterator<Item = &[f64]> {
        self.bufs.iter().map(Vec::as_slice)
    }
}

#[derive(Clone, Debug)]
struct Param {
    name: String,
    value: Tensor,
}

/// Named parameters, their gradient accumulators and Adam moments.
#[derive(Clone, Debug)]
pub struct ParamStore {
    params: Vec<Param>,
    grads: Gradients,
    pub(crate) first_moment: Vec<Vec<f64>>,
    pub(crate) second_moment: Vec<Vec<f64>>,
    pub(crate) step: u64,
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore {
            params: Vec::new(),
            grads: Gradients { bufs: Vec::new() },
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            step: 0,
        }
    }

    pub fn add<R: Rng + ?Sized>(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        init: Init,
        rng: &mut R,
    ) -> ParamId {
        let mut value = Tensor::zeros(shape);
        match init {
            Init::Zeros => {}
            Init::Constant(c) => value.data_mut().fill(c),
            Init::FanIn(fan_in) => {
                let bound = (1.0 / fan_in.max(1) as f64).sqrt();
                for v in value.data_mut() {
                    *v = rng.random_range(-bound..=bound);
                }
            }
        }
        let n = value.len();
        self.params.push(Param {
            name: name.into(),
            value,
        });
        self.grads.bufs.push(vec![0.0; n]);
        self.first_moment.push(vec![0.0; n]);
        self.second_moment.push(vec![0.0; n]);
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value(&self, id: ParamId) -> &[f64] {
        self.params[id.0].value.data()
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut [f64] {
        self.params[id.0].value.data_mut()
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn grads(&self) -> &Gradients {
        &self.grads
    }

    pub fn grads_mut(&mut self) -> &mut Gradients {
        &mut self.grads
    }

    /// Fresh zeroed gradient buffers with this store's layout.
    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            bufs: self
                .params
                .iter()
                .map(|p| vec![0.0; p.value.len()])
                .collect(),
        }
    }

    pub fn zero_grads(&mut self) {
        self.grads.zero();
    }

    pub fn accumulate(&mut self, grads: &Gradients) {
        self.grads.add(grads);
    }

    /// Replace a parameter's values, keeping its shape.
    pub fn set_values(&mut self, id: ParamId, values: &[f64]) -> Result<()> {
        let p = &mut self.params[id.0];
        if p.value.len() != values.len() {
            return Err(Error::Shape(format!(
                "parameter `{}` holds {} values, got {}",
                p.name,
                p.value.len(),
                values.len()
            )));
        }
        p.value.data_mut().copy_from_slice(values);
        Ok(())
    }
}
