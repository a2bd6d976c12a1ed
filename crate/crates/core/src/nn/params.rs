use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Vec<f64>,
    pub trainable: bool,
}

/// Named trainable tensors with reproducible initialisation.
///
/// Parameters are identified by dotted path names. Ids follow insertion
/// order; [`ParamStore::iter`] walks them sorted by name. All random
/// initialisers draw from one ChaCha stream seeded at construction, so two
/// stores built by the same sequence of calls are identical.
#[derive(Clone, Debug)]
pub struct ParamStore {
    params: Vec<Param>,
    index: BTreeMap<String, ParamId>,
    seed: u64,
    rng: ChaCha8Rng,
}

impl ParamStore {
    pub fn new(seed: u64) -> Self {
        ParamStore {
            params: Vec::new(),
            index: BTreeMap::new(),
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn add(&mut self, name: &str, value: Tensor) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::config(format!("duplicate parameter name `{name}`")));
        }
        let id = ParamId(self.params.len());
        let len = value.len();
        self.params.push(Param {
            name: name.to_string(),
            value,
            grad: vec![0.0; len],
            trainable: true,
        });
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn add_zeros(&mut self, name: &str, shape: Vec<usize>) -> Result<ParamId> {
        self.add(name, Tensor::zeros(shape))
    }

    /// Glorot-uniform matrix of shape `[rows, cols]`.
    pub fn add_xavier(&mut self, name: &str, rows: usize, cols: usize) -> Result<ParamId> {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        self.add_uniform(name, vec![rows, cols], bound)
    }

    pub fn add_uniform(&mut self, name: &str, shape: Vec<usize>, bound: f64) -> Result<ParamId> {
        let len: usize = shape.iter().product();
        let data = (0..len)
            .map(|_| {
                if bound > 0.0 {
                    self.rng.gen_range(-bound..bound)
                } else {
                    0.0
                }
            })
            .collect();
        self.add(name, Tensor::new(shape, data)?)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn param(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn param_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn set_trainable(&mut self, id: ParamId, trainable: bool) {
        self.params[id.0].trainable = trainable;
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Parameters in name order.
    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.index.values().map(move |&id| (id, &self.params[id.0]))
    }

    pub fn num_trainable_scalars(&self) -> usize {
        self.params
            .iter()
            .filter(|p| p.trainable)
            .map(|p| p.value.len())
            .sum()
    }

    /// Adds a gradient buffer produced by a backward pass.
    pub fn accumulate(&mut self, grads: &Gradients) {
        for (i, g) in grads.params.iter().enumerate() {
            if let Some(g) = g {
                let p = &mut self.params[i];
                for (acc, v) in p.grad.iter_mut().zip(g) {
                    *acc += v;
                }
            }
        }
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }
}

/// Gradients from one backward pass, keyed by parameter id and node.
#[derive(Clone, Debug, Default)]
pub struct Gradients {
    pub(crate) params: Vec<Option<Vec<f64>>>,
    pub(crate) nodes: Vec<Vec<f64>>,
}

impl Gradients {
    /// Gradient of a parameter; `None` when it received no gradient.
    pub fn param(&self, id: ParamId) -> Option<&[f64]> {
        self.params.get(id.0).and_then(|g| g.as_deref())
    }

    /// Gradient of an intermediate node. Empty if no gradient reached it.
    pub fn node(&self, id: super::graph::NodeId) -> &[f64] {
        &self.nodes[id.0]
    }
}
