//! Named parameter collections and their on-disk format.
//!
//! The parameter file is a single header line describing the layout
//! (`name shape...` per parameter, `;`-separated), followed by the raw
//! little-endian f64 values in layout order. Round trips are bit-exact.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Result, TensorError};
use crate::tape::{Gradients, Tape, TapeTensor};
use crate::tensor::Tensor;

const MAGIC: &str = "params-v1";

/// Ordered, uniquely named parameter tensors. Insertion order fixes the
/// serialization layout and the alignment of gradients and optimizer state.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
    index: HashMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<()> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(TensorError::DuplicateParam { name });
        }
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push((name, value));
        Ok(())
    }

    /// Append every entry of `other`, prefixing names with `prefix`.
    pub fn merge(&mut self, prefix: &str, other: ParamSet) -> Result<()> {
        for (name, value) in other.entries {
            self.insert(format!("{prefix}{name}"), value)?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.index
            .get(name)
            .map(|&i| &self.entries[i].1)
            .ok_or_else(|| TensorError::UnknownParam { name: name.into() })
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        match self.index.get(name) {
            Some(&i) => Ok(&mut self.entries[i].1),
            None => Err(TensorError::UnknownParam { name: name.into() }),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.entries.iter_mut().map(|(_, t)| t)
    }

    /// Total value count across all parameters.
    pub fn numel(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    /// True when both sets have identical names and shapes in identical order.
    pub fn same_layout(&self, other: &ParamSet) -> bool {
        self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((an, at), (bn, bt))| an == bn && at.shape() == bt.shape())
    }

    /// True when both sets are bitwise identical (layout and values).
    pub fn bit_identical(&self, other: &ParamSet) -> bool {
        self.same_layout(other)
            && self.entries.iter().zip(&other.entries).all(|((_, a), (_, b))| {
                a.data()
                    .iter()
                    .zip(b.data())
                    .all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }

    /// Register every parameter as a tape leaf for one loss evaluation.
    pub fn bind(&self, tape: &Tape) -> BoundParams {
        let mut ids = Vec::with_capacity(self.entries.len());
        let mut index = HashMap::with_capacity(self.entries.len());
        for (name, tensor) in &self.entries {
            let id = tape.leaf(tensor.clone());
            index.insert(name.clone(), ids.len());
            ids.push(id);
        }
        BoundParams { ids, index }
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = String::from(MAGIC);
        for (name, tensor) in &self.entries {
            header.push(';');
            header.push_str(name);
            for d in tensor.shape() {
                header.push(' ');
                header.push_str(&d.to_string());
            }
        }
        header.push('\n');
        w.write_all(header.as_bytes())?;
        for (_, tensor) in &self.entries {
            for v in tensor.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let mut reader = BufReader::new(r);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let header = header.trim_end_matches('\n');
        let mut fields = header.split(';');
        if fields.next() != Some(MAGIC) {
            return Err(TensorError::MalformedFile("bad magic".into()));
        }
        let mut set = ParamSet::new();
        for field in fields {
            let mut parts = field.split(' ');
            let name = parts
                .next()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| TensorError::MalformedFile("empty parameter name".into()))?;
            let shape: Vec<usize> = parts
                .map(|p| {
                    p.parse()
                        .map_err(|_| TensorError::MalformedFile(format!("bad dim {p:?}")))
                })
                .collect::<Result<_>>()?;
            let numel: usize = shape.iter().product();
            let mut buf = vec![0u8; numel * 8];
            reader.read_exact(&mut buf).map_err(|e| {
                TensorError::MalformedFile(format!("truncated values for {name}: {e}"))
            })?;
            let data = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            // Bypass the finiteness check: round-trips must preserve bits.
            set.insert(name, Tensor::from_raw(shape, data))?;
        }
        let mut extra = [0u8; 1];
        if reader.read(&mut extra)? != 0 {
            return Err(TensorError::MalformedFile("trailing bytes".into()));
        }
        Ok(set)
    }

    pub fn save_to_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.save(std::io::BufWriter::new(file))
    }

    pub fn load_from_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::load(file)
    }
}

/// Tape handles for one binding of a [`ParamSet`].
pub struct BoundParams {
    ids: Vec<TapeTensor>,
    index: HashMap<String, usize>,
}

impl BoundParams {
    pub fn get(&self, name: &str) -> Result<TapeTensor> {
        self.index
            .get(name)
            .map(|&i| self.ids[i])
            .ok_or_else(|| TensorError::UnknownParam { name: name.into() })
    }

    /// Gradients aligned with the originating `ParamSet` layout; parameters
    /// the loss never touched get zero gradients.
    pub fn gradients(&self, grads: &Gradients, params: &ParamSet) -> Result<Vec<Tensor>> {
        if params.len() != self.ids.len() {
            return Err(TensorError::LayoutMismatch {
                context: format!(
                    "{} bound ids vs {} parameters",
                    self.ids.len(),
                    params.len()
                ),
            });
        }
        Ok(params
            .iter()
            .zip(&self.ids)
            .map(|((_, tensor), &id)| grads.wrt_or_zeros(id, tensor.shape()))
            .collect())
    }
}
