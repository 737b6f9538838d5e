use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"EXPLCKPT";
const VERSION: u32 = 1;

/// Named parameter matrices, in registration order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Array2<f64>>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Array2<f64>) -> usize {
        let name = name.into();
        assert!(!self.index.contains_key(&name), "duplicate parameter {name}");
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.values.push(value);
        self.names.len() - 1
    }

    /// Glorot-uniform `rows × cols` matrix.
    pub fn add_glorot(&mut self, name: impl Into<String>, rows: usize, cols: usize, rng: &mut impl Rng) -> usize {
        let a = (6.0 / (rows + cols) as f64).sqrt();
        let value = Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-a..a));
        self.add(name, value)
    }

    pub fn add_const(&mut self, name: impl Into<String>, rows: usize, cols: usize, v: f64) -> usize {
        self.add(name, Array2::from_elem((rows, cols), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn value(&self, id: usize) -> &Array2<f64> {
        &self.values[id]
    }

    pub fn value_mut(&mut self, id: usize) -> &mut Array2<f64> {
        &mut self.values[id]
    }

    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Array2::len).sum()
    }

    /// Rounds every value to `f32` precision, matching a save/load round trip.
    pub fn round_to_f32(&mut self) {
        for v in &mut self.values {
            v.mapv_inplace(|x| x as f32 as f64);
        }
    }

    /// Writes the checkpoint: magic, version, a JSON `header` (model config),
    /// the tensor table (name, rows, cols), then all values as little-endian `f32`.
    pub fn write_checkpoint(&self, w: &mut impl Write, header: &str) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u32::<LittleEndian>(header.len() as u32)?;
        w.write_all(header.as_bytes())?;
        w.write_u32::<LittleEndian>(self.len() as u32)?;
        for (name, v) in self.names.iter().zip(&self.values) {
            w.write_u32::<LittleEndian>(name.len() as u32)?;
            w.write_all(name.as_bytes())?;
            w.write_u32::<LittleEndian>(v.nrows() as u32)?;
            w.write_u32::<LittleEndian>(v.ncols() as u32)?;
        }
        for v in &self.values {
            for &x in v.iter() {
                w.write_f32::<LittleEndian>(x as f32)?;
            }
        }
        Ok(())
    }

    /// Reads a checkpoint, returning the JSON header and the parameters.
    pub fn read_checkpoint(r: &mut impl Read, path: &Path) -> Result<(String, Self)> {
        let bad = |reason: String| Error::Format {
            what: "checkpoint",
            path: path.to_path_buf(),
            reason,
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let read_string = |r: &mut dyn Read, len: usize| -> Result<String> {
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            String::from_utf8(buf).map_err(|e| bad(e.to_string()))
        };
        let header_len = r.read_u32::<LittleEndian>()? as usize;
        let header = read_string(r, header_len)?;
        let count = r.read_u32::<LittleEndian>()? as usize;
        let mut table = Vec::with_capacity(count);
        for _ in 0..count {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let name = read_string(r, len)?;
            let rows = r.read_u32::<LittleEndian>()? as usize;
            let cols = r.read_u32::<LittleEndian>()? as usize;
            table.push((name, rows, cols));
        }
        let mut store = Self::new();
        for (name, rows, cols) in table {
            let mut data = vec![0f32; rows * cols];
            r.read_f32_into::<LittleEndian>(&mut data)?;
            let v = Array2::from_shape_vec((rows, cols), data.into_iter().map(f64::from).collect())
                .map_err(|e| bad(e.to_string()))?;
            if store.id(&name).is_some() {
                return Err(bad(format!("duplicate tensor {name}")));
            }
            store.add(name, v);
        }
        Ok((header, store))
    }

    /// Copies values from `other` by name; every name and shape must match.
    pub fn load_from(&mut self, other: &ParamStore) -> std::result::Result<(), String> {
        if other.len() != self.len() {
            return Err(format!("expected {} tensors, found {}", self.len(), other.len()));
        }
        for (id, name) in self.names.iter().enumerate() {
            let src = other.id(name).ok_or_else(|| format!("missing tensor {name}"))?;
            if other.values[src].dim() != self.values[id].dim() {
                return Err(format!("shape mismatch for {name}"));
            }
        }
        for id in 0..self.len() {
            let src = other.id(&self.names[id]).expect("checked above");
            self.values[id] = other.values[src].clone();
        }
        Ok(())
    }
}

/// Per-parameter gradient accumulators.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    grads: Vec<Array2<f64>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self {
            grads: store.values.iter().map(|v| Array2::zeros(v.dim())).collect(),
        }
    }

    pub fn add(&mut self, id: usize, g: &Array2<f64>) {
        self.grads[id] += g;
    }

    pub fn get(&self, id: usize) -> &Array2<f64> {
        &self.grads[id]
    }

    pub fn global_norm(&self) -> f64 {
        self.grads.iter().flat_map(|g| g.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        for g in &mut self.grads {
            g.mapv_inplace(|x| x * c);
        }
    }

    /// Sum of absolute gradient entries over parameters whose name starts with `prefix`.
    pub fn abs_sum_with_prefix(&self, store: &ParamStore, prefix: &str) -> f64 {
        (0..store.len())
            .filter(|&i| store.name(i).starts_with(prefix))
            .map(|i| self.grads[i].iter().map(|x| x.abs()).sum::<f64>())
            .sum()
    }
}

/// Adam with decoupled weight decay.
#[derive(Clone, Debug)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl AdamW {
    pub fn new(store: &ParamStore, lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            m: store.values.iter().map(|v| Array2::zeros(v.dim())).collect(),
            v: store.values.iter().map(|v| Array2::zeros(v.dim())).collect(),
        }
    }

    /// One update. Weight decay applies to matrices, not to row vectors
    /// (biases, normalization gains, embeddings of a single row).
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for id in 0..store.len() {
            let g = &grads.grads[id];
            let decay = if store.values[id].nrows() > 1 { self.weight_decay } else { 0.0 };
            let (m, v, p) = (&mut self.m[id], &mut self.v[id], &mut store.values[id]);
            ndarray::Zip::from(p).and(m).and(v).and(g).for_each(|p, m, v, &g| {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let update = (*m / bc1) / ((*v / bc2).sqrt() + self.eps);
                *p -= self.lr * (update + decay * *p);
            });
        }
    }
}
