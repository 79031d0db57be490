//! A binary file format for precomputed embeddings, plus an encoder
//! backend that serves lookups from it.
//!
//! Layout (all integers little-endian): the magic bytes `FDAE`, a u16
//! format version (currently 1), a u32 embedding dimension, and a u32
//! record count, followed by one record per embedding: a u16 id
//! length, the UTF-8 id bytes, then `dim` f32 values. Records are
//! stored sorted by id, so saving is deterministic.
//!
//! The [`StoreBackend`] resolves requests by convention: frame `i` of
//! video `v` is the record `v#f<i>` (with `i` counting positions in
//! the sampled frame list) and caption `j` is `v#t<j>`.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use fda_core::{BinaryMask, EncodeError, EncoderBackend, RgbFrame, SourceId};

/// File identification bytes at the start of every store.
pub const MAGIC: [u8; 4] = *b"FDAE";
/// Format version this build reads and writes.
pub const VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("not an embedding store: magic bytes are {found:?}, expected {MAGIC:?}")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported store version {version}, this build reads version {VERSION}")]
    UnsupportedVersion { version: u16 },
    #[error("store dimension must be at least 1")]
    ZeroDimension,
    #[error("store data ends early while reading {context}")]
    Truncated { context: &'static str },
    #[error("{extra} trailing bytes after the last record")]
    TrailingBytes { extra: usize },
    #[error("record id is not valid UTF-8")]
    InvalidId,
    #[error("record id is {len} bytes, the format caps ids at 65535")]
    IdTooLong { len: usize },
    #[error("duplicate record id '{id}'")]
    DuplicateId { id: String },
    #[error("record '{id}' has {got} values, store dimension is {expected}")]
    WrongDimension {
        id: String,
        expected: usize,
        got: usize,
    },
    #[error("record '{id}' contains a non-finite value")]
    NonFinite { id: String },
    #[error("cannot access store {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// An id-keyed collection of equal-dimension embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    records: BTreeMap<String, Vec<f32>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self, StoreError> {
        if dim == 0 {
            return Err(StoreError::ZeroDimension);
        }
        Ok(Self {
            dim,
            records: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Adds one record, rejecting duplicate ids, wrong dimensions,
    /// non-finite values, and ids longer than the format allows.
    pub fn insert(&mut self, id: String, values: Vec<f32>) -> Result<(), StoreError> {
        if id.len() > u16::MAX as usize {
            return Err(StoreError::IdTooLong { len: id.len() });
        }
        if values.len() != self.dim {
            return Err(StoreError::WrongDimension {
                id,
                expected: self.dim,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StoreError::NonFinite { id });
        }
        if self.records.contains_key(&id) {
            return Err(StoreError::DuplicateId { id });
        }
        self.records.insert(id, values);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.records.get(id).map(Vec::as_slice)
    }

    /// Record ids in sorted order.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    /// Serializes the store; output depends only on the records.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.records.len() as u32).to_le_bytes());
        for (id, values) in &self.records {
            out.extend_from_slice(&(id.len() as u16).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StoreError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic bytes")?;
        if magic != MAGIC {
            let mut found = [0u8; 4];
            found.copy_from_slice(magic);
            return Err(StoreError::BadMagic { found });
        }
        let version = u16::from_le_bytes(r.take(2, "version")?.try_into().unwrap());
        if version != VERSION {
            return Err(StoreError::UnsupportedVersion { version });
        }
        let dim = u32::from_le_bytes(r.take(4, "dimension")?.try_into().unwrap()) as usize;
        let count = u32::from_le_bytes(r.take(4, "record count")?.try_into().unwrap());
        let mut store = Self::new(dim)?;
        for _ in 0..count {
            let id_len = u16::from_le_bytes(r.take(2, "id length")?.try_into().unwrap()) as usize;
            let id = std::str::from_utf8(r.take(id_len, "record id")?)
                .map_err(|_| StoreError::InvalidId)?
                .to_owned();
            let raw = r.take(dim * 4, "embedding values")?;
            let values = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            store.insert(id, values)?;
        }
        if r.pos != bytes.len() {
            return Err(StoreError::TrailingBytes {
                extra: bytes.len() - r.pos,
            });
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        crate::write_atomic(path, &self.to_bytes()).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let bytes = std::fs::read(path).map_err(|source| StoreError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, context: &'static str) -> Result<&'a [u8], StoreError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(StoreError::Truncated { context })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }
}

/// Record id for frame `index` of a video, by store convention.
pub fn frame_record_id(video_id: &str, index: usize) -> String {
    format!("{video_id}#f{index}")
}

/// Record id for caption `index` of a video, by store convention.
pub fn text_record_id(video_id: &str, index: usize) -> String {
    format!("{video_id}#t{index}")
}

/// Serves embeddings from a store; frame pixels and caption text are
/// ignored, only the source identity selects the record.
#[derive(Debug, Clone)]
pub struct StoreBackend {
    store: EmbeddingStore,
}

impl StoreBackend {
    pub fn new(store: EmbeddingStore) -> Self {
        Self { store }
    }

    pub fn open(path: &Path) -> Result<Self, StoreError> {
        Ok(Self::new(EmbeddingStore::load(path)?))
    }

    fn lookup(&self, id: &str) -> Result<Vec<f32>, EncodeError> {
        self.store
            .get(id)
            .map(<[f32]>::to_vec)
            .ok_or_else(|| EncodeError::Backend {
                message: format!("store has no record '{id}'"),
            })
    }
}

impl EncoderBackend for StoreBackend {
    fn dim(&self) -> usize {
        self.store.dim()
    }

    fn encode_frame(
        &mut self,
        _frame: &RgbFrame,
        _mask: &BinaryMask,
        source: SourceId<'_>,
    ) -> Result<Vec<f32>, EncodeError> {
        self.lookup(&frame_record_id(source.video_id, source.index))
    }

    fn encode_text(&mut self, _text: &str, source: SourceId<'_>) -> Result<Vec<f32>, EncodeError> {
        self.lookup(&text_record_id(source.video_id, source.index))
    }
}
