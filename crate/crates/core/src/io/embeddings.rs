//! The `ZSE1` embedding file format.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic   4 bytes  "ZSE1" (0x5A 0x53 0x45 0x31)
//! version u16      1
//! dim     u32
//! count   u64
//! count × { id_len u16, id [id_len bytes UTF-8], values [dim × f32] }
//! ```

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::{self, ZERO_NORM};

pub const MAGIC: [u8; 4] = *b"ZSE1";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 8;

/// Anything that can hand out an embedding by key.
pub trait EmbeddingLookup {
    fn lookup(&self, key: &str) -> Option<&[f32]>;
}

/// Unit-norm vectors of one shared dimension, keyed by id, kept in insertion
/// order in a single contiguous buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    index: HashMap<String, usize>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig(
                "embedding dimension must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            ids: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
        })
    }

    pub fn with_capacity(dim: usize, capacity: usize) -> Result<Self> {
        let mut s = Self::new(dim)?;
        s.ids.reserve(capacity);
        s.data.reserve(capacity * dim);
        s.index.reserve(capacity);
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.index.get(id).map(|&i| self.row(i))
    }

    pub(crate) fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), self.row(i)))
    }

    /// Adds a vector, enforcing dimension, finiteness, unit norm and id
    /// uniqueness.
    pub fn insert(&mut self, id: impl Into<String>, values: &[f32]) -> Result<()> {
        let id = id.into();
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: values.len(),
            });
        }
        let norm = numeric::l2_norm(values);
        if !numeric::norm_is_unit(norm) {
            return Err(Error::NotUnitNorm { id, norm });
        }
        self.push(id, values)
    }

    fn push(&mut self, id: String, values: &[f32]) -> Result<()> {
        if id.len() > u16::MAX as usize {
            return Err(Error::InvariantViolation {
                id,
                reason: "id longer than 65535 bytes".into(),
            });
        }
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(values);
        Ok(())
    }
}

impl EmbeddingLookup for EmbeddingStore {
    fn lookup(&self, key: &str) -> Option<&[f32]> {
        self.get(key)
    }
}

impl EmbeddingLookup for HashMap<String, Vec<f32>> {
    fn lookup(&self, key: &str) -> Option<&[f32]> {
        self.get(key).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Rescale off-norm records to unit length instead of rejecting them.
    pub renormalize: bool,
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    read_embeddings_with(path, ReadOptions::default())
}

pub fn read_embeddings_with(path: impl AsRef<Path>, opts: ReadOptions) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(Error::io(path))?;
    decode(&bytes, opts)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.buf.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

/// Parses an in-memory `ZSE1` image.
pub fn decode(bytes: &[u8], opts: ReadOptions) -> Result<EmbeddingStore> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(Error::BadMagic(bytes[..bytes.len().min(4)].to_vec()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::BadHeader(format!(
            "header is {} bytes, expected {HEADER_LEN}",
            bytes.len()
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dim = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[10..18].try_into().unwrap());
    if dim == 0 {
        return Err(Error::BadHeader("dimension is zero".into()));
    }

    let mut cur = Cursor {
        buf: bytes,
        pos: HEADER_LEN,
    };
    let min_record = 2 + dim * 4;
    let plausible = (cur.remaining() / min_record).min(count as usize);
    let mut store = EmbeddingStore::with_capacity(dim, plausible)?;
    let mut values = vec![0f32; dim];
    for found in 0..count {
        let mismatch = Error::CountMismatch {
            declared: count,
            found,
        };
        let Some(len) = cur.take(2) else {
            return Err(mismatch);
        };
        let id_len = u16::from_le_bytes([len[0], len[1]]) as usize;
        let Some(id_bytes) = cur.take(id_len) else {
            return Err(mismatch);
        };
        let Some(raw) = cur.take(dim * 4) else {
            return Err(mismatch);
        };
        let id = std::str::from_utf8(id_bytes)
            .map_err(|_| Error::InvariantViolation {
                id: String::from_utf8_lossy(id_bytes).into_owned(),
                reason: "id is not valid UTF-8".into(),
            })?
            .to_owned();
        for (v, chunk) in values.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().unwrap());
        }
        let norm = numeric::l2_norm(&values);
        if !numeric::norm_is_unit(norm) {
            if opts.renormalize && norm.is_finite() && norm > ZERO_NORM {
                for v in values.iter_mut() {
                    *v = (*v as f64 / norm) as f32;
                }
            } else {
                return Err(Error::NotUnitNorm { id, norm });
            }
        }
        store.push(id, &values)?;
    }
    if cur.remaining() != 0 {
        return Err(Error::CountMismatch {
            declared: count,
            found: count + 1,
        });
    }
    Ok(store)
}

/// Serialises a store to its `ZSE1` image.
pub fn encode(store: &EmbeddingStore) -> Vec<u8> {
    let mut out = Vec::with_capacity(
        HEADER_LEN
            + store.len() * (2 + store.dim * 4)
            + store.ids.iter().map(String::len).sum::<usize>(),
    );
    write_to(store, &mut out).expect("writing to a Vec cannot fail");
    out
}

fn write_to(store: &EmbeddingStore, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(store.dim as u32).to_le_bytes())?;
    w.write_all(&(store.len() as u64).to_le_bytes())?;
    let mut row = Vec::with_capacity(store.dim * 4);
    for (id, values) in store.iter() {
        w.write_all(&(id.len() as u16).to_le_bytes())?;
        w.write_all(id.as_bytes())?;
        row.clear();
        for v in values {
            row.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&row)?;
    }
    Ok(())
}

pub fn write_embeddings(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(file);
    write_to(store, &mut w).map_err(Error::io(path))?;
    w.flush().map_err(Error::io(path))
}
