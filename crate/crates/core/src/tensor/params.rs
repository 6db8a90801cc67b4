use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::Tensor;
use super::tape::{Gradients, Tape};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// How a freshly registered parameter is filled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Uniform in `+-sqrt(6 / (fan_in + fan_out))`.
    Glorot { fan_in: usize, fan_out: usize },
    Zeros,
    Ones,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct StoredParam {
    name: String,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

/// Named trainable tensors.
///
/// Initial values are drawn from a generator seeded by `(seed, name)`, so two
/// models built from different configurations share identical initial
/// values for every parameter they have in common.
#[derive(Clone, Debug)]
pub struct ParameterStore {
    seed: u64,
    names: Vec<String>,
    values: Vec<Tensor>,
    index: HashMap<String, ParamId>,
}

impl ParameterStore {
    pub fn new(seed: u64) -> Self {
        ParameterStore {
            seed,
            names: Vec::new(),
            values: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Registers a parameter; every name may be registered only once.
    pub fn register(&mut self, name: impl Into<String>, rows: usize, cols: usize, init: Init) -> ParamId {
        let name = name.into();
        assert!(
            !self.index.contains_key(&name),
            "parameter {name} registered twice"
        );
        let value = match init {
            Init::Zeros => Tensor::zeros(rows, cols),
            Init::Ones => Tensor::full(rows, cols, 1.0),
            Init::Glorot { fan_in, fan_out } => {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut rng = ChaCha8Rng::seed_from_u64(name_seed(self.seed, &name));
                Tensor::from_fn(rows, cols, |_, _| rng.random_range(-limit..limit))
            }
        };
        let id = ParamId(self.values.len());
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.values.push(value);
        id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn lookup(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    /// Total number of trainable scalars.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    pub fn values(&self) -> &[Tensor] {
        &self.values
    }

    /// Gradient for every parameter after a backward pass, zero for
    /// parameters the pass never touched.
    pub fn collect_grads(&self, tape: &Tape, grads: &Gradients) -> Vec<Tensor> {
        self.ids()
            .map(|id| match tape.param_var(id) {
                Some(v) => grads.wrt(tape, v),
                None => {
                    let [r, c] = self.get(id).shape();
                    Tensor::zeros(r, c)
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let stored: Vec<StoredParam> = self
            .names
            .iter()
            .zip(&self.values)
            .map(|(name, t)| StoredParam {
                name: name.clone(),
                rows: t.rows(),
                cols: t.cols(),
                values: t.data().to_vec(),
            })
            .collect();
        Ok(serde_json::to_string(&stored)?)
    }

    /// Overwrites values from a JSON dump. Names and shapes must match this
    /// store exactly.
    pub fn load_json(&mut self, json: &str) -> Result<()> {
        let stored: Vec<StoredParam> = serde_json::from_str(json)?;
        if stored.len() != self.values.len() {
            return Err(Error::Config(format!(
                "parameter file holds {} tensors, model expects {}",
                stored.len(),
                self.values.len()
            )));
        }
        for p in stored {
            let id = self
                .lookup(&p.name)
                .ok_or_else(|| Error::Config(format!("unknown parameter {}", p.name)))?;
            let t = Tensor::new([p.rows, p.cols], p.values)?;
            if t.shape() != self.values[id.0].shape() {
                return Err(Error::dim("load parameter", &self.values[id.0].shape(), &t.shape()));
            }
            self.values[id.0] = t;
        }
        Ok(())
    }
}

fn name_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a over the name, mixed with the store seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_names_share_initial_values() {
        let mut a = ParameterStore::new(9);
        let mut b = ParameterStore::new(9);
        b.register("other", 2, 2, Init::Glorot { fan_in: 2, fan_out: 2 });
        let ia = a.register("w", 3, 4, Init::Glorot { fan_in: 3, fan_out: 4 });
        let ib = b.register("w", 3, 4, Init::Glorot { fan_in: 3, fan_out: 4 });
        assert_eq!(a.get(ia), b.get(ib));
        let limit = (6.0f64 / 7.0).sqrt();
        assert!(a.get(ia).data().iter().all(|v| v.abs() <= limit));
    }

    #[test]
    #[should_panic(expected = "registered twice")]
    fn double_registration_panics() {
        let mut s = ParameterStore::new(0);
        s.register("w", 1, 1, Init::Zeros);
        s.register("w", 1, 1, Init::Zeros);
    }

    #[test]
    fn json_round_trip() {
        let mut s = ParameterStore::new(1);
        s.register("a", 2, 3, Init::Glorot { fan_in: 2, fan_out: 3 });
        s.register("g", 1, 3, Init::Ones);
        let json = s.to_json().unwrap();
        let mut t = ParameterStore::new(2);
        t.register("a", 2, 3, Init::Zeros);
        t.register("g", 1, 3, Init::Zeros);
        t.load_json(&json).unwrap();
        assert_eq!(s.values(), t.values());
    }
}
