use std::collections::HashMap;

use rand::Rng;

use super::{Gradients, Precision, Tensor, TensorError};

/// Handle to a parameter in a [`ParameterStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

#[derive(Debug, Clone, PartialEq)]
struct Param {
    name: String,
    value: Tensor,
    grad: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Named trainable tensors with gradients and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStore {
    params: Vec<Param>,
    index: HashMap<String, usize>,
    precision: Precision,
}

const STORE_VERSION: u32 = 1;

impl ParameterStore {
    pub fn new(precision: Precision) -> ParameterStore {
        ParameterStore {
            params: Vec::new(),
            index: HashMap::new(),
            precision,
        }
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn add(&mut self, name: &str, mut value: Tensor) -> Result<ParamId, TensorError> {
        if self.index.contains_key(name) {
            return Err(TensorError::DuplicateParam(name.to_string()));
        }
        self.precision.round_all(value.data_mut());
        let n = value.data().len();
        let id = self.params.len();
        self.params.push(Param {
            name: name.to_string(),
            value,
            grad: vec![0.0; n],
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        });
        self.index.insert(name.to_string(), id);
        Ok(ParamId(id))
    }

    /// Glorot-uniform initialized `rows × cols` weight.
    pub fn add_weight(&mut self, name: &str, rows: usize, cols: usize, rng: &mut impl Rng) -> Result<ParamId, TensorError> {
        let limit = (6.0 / (rows + cols).max(1) as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
        self.add(name, Tensor::new(rows, cols, data)?)
    }

    pub fn add_zeros(&mut self, name: &str, rows: usize, cols: usize) -> Result<ParamId, TensorError> {
        self.add(name, Tensor::zeros(rows, cols))
    }

    pub fn id(&self, name: &str) -> Result<ParamId, TensorError> {
        self.index
            .get(name)
            .map(|&i| ParamId(i))
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    /// Parameters whose name starts with `prefix`.
    pub fn ids_with_prefix(&self, prefix: &str) -> Vec<ParamId> {
        self.ids().filter(|&id| self.name(id).starts_with(prefix)).collect()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.data().len()).sum()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    /// Direct write access, for initialization schemes and tests.
    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.params[id.0].grad
    }

    /// Most Adam updates applied to any parameter.
    pub fn step_count(&self) -> u64 {
        self.params.iter().map(|p| p.step).max().unwrap_or(0)
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Add tape gradients into the stored gradients.
    pub fn accumulate(&mut self, grads: &Gradients) {
        for (p, g) in self.params.iter_mut().zip(grads.per_param()) {
            if let Some(g) = g {
                for (a, b) in p.grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad_norm_of(&self.ids().collect::<Vec<_>>())
    }

    pub fn grad_norm_of(&self, ids: &[ParamId]) -> f64 {
        ids.iter()
            .flat_map(|id| self.params[id.0].grad.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn check_finite(&self) -> Result<(), TensorError> {
        for p in &self.params {
            if p.grad.iter().any(|g| !g.is_finite()) {
                return Err(TensorError::NonFinite(p.name.clone()));
            }
        }
        Ok(())
    }

    /// Scale all gradients by `max_norm / norm` when the global norm exceeds
    /// `max_norm`. Returns the factor applied.
    pub fn clip_gradients(&mut self, max_norm: f64) -> Result<f64, TensorError> {
        self.clip_gradients_of(&self.ids().collect::<Vec<_>>(), max_norm)
    }

    /// [`clip_gradients`](Self::clip_gradients) over a subset, with the norm
    /// taken over that subset only.
    pub fn clip_gradients_of(&mut self, ids: &[ParamId], max_norm: f64) -> Result<f64, TensorError> {
        self.check_finite()?;
        let norm = self.grad_norm_of(ids);
        if norm <= max_norm || norm == 0.0 {
            return Ok(1.0);
        }
        let scale = max_norm / norm;
        for id in ids {
            self.params[id.0].grad.iter_mut().for_each(|g| *g *= scale);
        }
        Ok(scale)
    }

    /// One bias-corrected Adam update from the stored gradients.
    pub fn adam_step(&mut self, adam: &Adam) -> Result<(), TensorError> {
        self.adam_step_of(&self.ids().collect::<Vec<_>>(), adam)
    }

    /// Adam update of a subset. Each parameter keeps its own step count.
    pub fn adam_step_of(&mut self, ids: &[ParamId], adam: &Adam) -> Result<(), TensorError> {
        self.check_finite()?;
        let prec = self.precision;
        for id in ids {
            let p = &mut self.params[id.0];
            p.step += 1;
            let t = p.step as i32;
            let c1 = 1.0 - adam.beta1.powi(t);
            let c2 = 1.0 - adam.beta2.powi(t);
            let value = p.value.data_mut();
            for i in 0..value.len() {
                let g = p.grad[i];
                p.m[i] = prec.round(adam.beta1 * p.m[i] + (1.0 - adam.beta1) * g);
                p.v[i] = prec.round(adam.beta2 * p.v[i] + (1.0 - adam.beta2) * g * g);
                let mhat = p.m[i] / c1;
                let vhat = p.v[i] / c2;
                value[i] = prec.round(value[i] - adam.lr * mhat / (vhat.sqrt() + adam.eps));
            }
        }
        Ok(())
    }

    /// Binary form: version, precision, then per parameter its name, shape,
    /// step count, values and Adam moments, all little-endian. Values are
    /// written at the store's precision.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend(STORE_VERSION.to_le_bytes());
        out.push(match self.precision {
            Precision::F32 => 4,
            Precision::F64 => 8,
        });
        out.extend((self.params.len() as u32).to_le_bytes());
        for p in &self.params {
            out.extend((p.name.len() as u32).to_le_bytes());
            out.extend(p.name.as_bytes());
            out.extend((p.value.rows() as u64).to_le_bytes());
            out.extend((p.value.cols() as u64).to_le_bytes());
            out.extend(p.step.to_le_bytes());
            for buf in [p.value.data(), &p.m, &p.v] {
                for &x in buf {
                    match self.precision {
                        Precision::F32 => out.extend((x as f32).to_le_bytes()),
                        Precision::F64 => out.extend(x.to_le_bytes()),
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ParameterStore, TensorError> {
        let mut r = Reader { bytes, pos: 0 };
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != STORE_VERSION {
            return Err(TensorError::Checkpoint(format!("unsupported parameter format version {version}")));
        }
        let precision = match r.take(1)?[0] {
            4 => Precision::F32,
            8 => Precision::F64,
            b => return Err(TensorError::Checkpoint(format!("bad precision tag {b}"))),
        };
        let mut store = ParameterStore::new(precision);
        let count = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
        for _ in 0..count {
            let len = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| TensorError::Checkpoint("parameter name is not UTF-8".into()))?;
            let rows = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
            let cols = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
            let step = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
            let n = rows
                .checked_mul(cols)
                .ok_or_else(|| TensorError::Checkpoint("shape overflow".into()))?;
            let read = |r: &mut Reader| -> Result<Vec<f64>, TensorError> {
                (0..n)
                    .map(|_| {
                        Ok(match precision {
                            Precision::F32 => f32::from_le_bytes(r.take(4)?.try_into().unwrap()) as f64,
                            Precision::F64 => f64::from_le_bytes(r.take(8)?.try_into().unwrap()),
                        })
                    })
                    .collect()
            };
            let value = read(&mut r)?;
            let m = read(&mut r)?;
            let v = read(&mut r)?;
            let id = store.add(&name, Tensor::new(rows, cols, value)?)?;
            store.params[id.0].m = m;
            store.params[id.0].v = v;
            store.params[id.0].step = step;
        }
        if r.pos != bytes.len() {
            return Err(TensorError::Checkpoint("trailing bytes after parameters".into()));
        }
        Ok(store)
    }

    /// Copy values of every parameter present in both stores by name.
    pub fn load_values_from(&mut self, other: &ParameterStore) -> Result<(), TensorError> {
        for p in &mut self.params {
            let src = other.id(&p.name)?;
            let src = other.value(src);
            if src.shape() != p.value.shape() {
                return Err(TensorError::Shape {
                    op: "load",
                    lhs: p.value.shape(),
                    rhs: src.shape(),
                });
            }
            p.value = src.clone();
        }
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TensorError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| TensorError::Checkpoint("truncated parameter data".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}
