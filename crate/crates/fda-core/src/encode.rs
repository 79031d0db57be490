//! Embedding utilities and pluggable frame/text encoders.
//!
//! An [`EncoderBackend`] maps masked RGB frames and captions into a
//! shared embedding space. Frame embeddings are averaged into a single
//! unnormalized video embedding; normalization happens at similarity
//! time, so retrieval always compares one vector per video against one
//! vector per caption.
//!
//! Two built-in backends cover testing needs without model weights:
//! [`MockEncoder`] derives unit vectors from a content hash, and
//! [`PlantedEncoder`] places known videos and captions on shared
//! anchors so retrieval quality is predictable by construction.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use crate::raster::{BinaryMask, RasterError, RgbFrame};
use crate::rng::SplitMix64;

/// Smallest embedding dimension the backends accept; one dimension
/// cannot hold more than a sign of information.
pub const MIN_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncodeError {
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding dimension must be at least {MIN_DIM}, got {got}")]
    DimensionTooSmall { got: usize },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("cannot pool an empty set of frame embeddings")]
    EmptyPool,
    #[error("noise level must be within [0, 1), got {value}")]
    InvalidNoise { value: f64 },
    #[error("planted encoder needs {needed} anchors but only has {dim} dimensions")]
    TooManyAnchors { needed: usize, dim: usize },
    #[error("source '{id}' has no planted correspondence entry")]
    UnknownSource { id: String },
    #[error("encoder backend failure: {message}")]
    Backend { message: String },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Identifies what is being encoded: the owning video and the position
/// of the frame or caption within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceId<'a> {
    pub video_id: &'a str,
    pub index: usize,
}

/// A frame/text encoder producing fixed-dimension embeddings.
///
/// Implementations may key on pixel and text content, on the source
/// identity, or on both, but must be deterministic for identical
/// inputs.
pub trait EncoderBackend {
    /// Dimension of every embedding this backend produces.
    fn dim(&self) -> usize;

    /// Embeds one RGB frame together with its dynamic-region mask.
    fn encode_frame(
        &mut self,
        frame: &RgbFrame,
        mask: &BinaryMask,
        source: SourceId<'_>,
    ) -> Result<Vec<f32>, EncodeError>;

    /// Embeds one caption.
    fn encode_text(&mut self, text: &str, source: SourceId<'_>) -> Result<Vec<f32>, EncodeError>;
}

/// Scales `v` to unit L2 norm in place and returns the original norm.
/// A zero vector has no direction and is rejected.
pub fn l2_normalize(v: &mut [f32]) -> Result<f64, EncodeError> {
    let norm = libm::sqrt(v.iter().map(|&x| x as f64 * x as f64).sum::<f64>());
    if norm == 0.0 {
        return Err(EncodeError::ZeroVector);
    }
    for x in v.iter_mut() {
        *x = (*x as f64 / norm) as f32;
    }
    Ok(norm)
}

/// Cosine similarity of two equal-length vectors; zero-norm inputs
/// yield 0.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64, EncodeError> {
    if a.len() != b.len() {
        return Err(EncodeError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        dot += x as f64 * y as f64;
        na += x as f64 * x as f64;
        nb += y as f64 * y as f64;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (libm::sqrt(na) * libm::sqrt(nb)))
}

/// Zeroes out every pixel the mask marks as background.
pub fn apply_mask(frame: &RgbFrame, mask: &BinaryMask) -> Result<RgbFrame, EncodeError> {
    crate::raster::ensure_same_dims(frame.width(), frame.height(), mask.width(), mask.height())?;
    let mut out = frame.clone();
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            if !mask.is_white(x, y) {
                out.set(x, y, [0, 0, 0]);
            }
        }
    }
    Ok(out)
}

/// Pools frame embeddings into one video embedding by elementwise
/// arithmetic mean. Deliberately not normalized: cosine similarity
/// normalizes later, and keeping the raw mean preserves
/// `pool(c * v) == c * pool(v)`.
pub fn pool_average(frame_embeddings: &[Vec<f32>]) -> Result<Vec<f32>, EncodeError> {
    let first = frame_embeddings.first().ok_or(EncodeError::EmptyPool)?;
    let dim = first.len();
    let mut acc = vec![0.0f64; dim];
    for emb in frame_embeddings {
        if emb.len() != dim {
            return Err(EncodeError::DimensionMismatch {
                expected: dim,
                got: emb.len(),
            });
        }
        for (slot, &x) in acc.iter_mut().zip(emb) {
            *slot += x as f64;
        }
    }
    let n = frame_embeddings.len() as f64;
    Ok(acc.iter().map(|&s| (s / n) as f32).collect())
}

fn unit_vector_from_digest(digest: &[u8], dim: usize) -> Vec<f32> {
    let mut seed_bytes = [0u8; 8];
    seed_bytes.copy_from_slice(&digest[..8]);
    let mut rng = SplitMix64::new(u64::from_le_bytes(seed_bytes));
    let mut v: Vec<f32> = (0..dim).map(|_| rng.next_unit() as f32).collect();
    if l2_normalize(&mut v).is_err() {
        v[0] = 1.0;
    }
    v
}

fn check_dim(dim: usize) -> Result<(), EncodeError> {
    if dim < MIN_DIM {
        return Err(EncodeError::DimensionTooSmall { got: dim });
    }
    Ok(())
}

/// Content-hash encoder: deterministic unit vectors with no semantic
/// structure.
///
/// Frame embeddings hash the pixel bytes together with the mask bytes,
/// so changing either changes the embedding; text embeddings hash the
/// caption. Identical inputs under the same seed always produce the
/// identical vector, which makes end-to-end runs reproducible while
/// behaving like an uninformed model (retrieval quality stays at
/// chance level).
#[derive(Debug, Clone)]
pub struct MockEncoder {
    dim: usize,
    seed: u64,
}

impl MockEncoder {
    pub fn new(dim: usize, seed: u64) -> Result<Self, EncodeError> {
        check_dim(dim)?;
        Ok(Self { dim, seed })
    }
}

impl EncoderBackend for MockEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_frame(
        &mut self,
        frame: &RgbFrame,
        mask: &BinaryMask,
        _source: SourceId<'_>,
    ) -> Result<Vec<f32>, EncodeError> {
        crate::raster::ensure_same_dims(frame.width(), frame.height(), mask.width(), mask.height())?;
        let mut hasher = Sha256::new();
        hasher.update(b"fda.mock.frame\0");
        hasher.update(self.seed.to_le_bytes());
        hasher.update(frame.width().to_le_bytes());
        hasher.update(frame.height().to_le_bytes());
        hasher.update(frame.pixels());
        hasher.update(mask.values());
        Ok(unit_vector_from_digest(&hasher.finalize(), self.dim))
    }

    fn encode_text(&mut self, text: &str, _source: SourceId<'_>) -> Result<Vec<f32>, EncodeError> {
        let mut hasher = Sha256::new();
        hasher.update(b"fda.mock.text\0");
        hasher.update(self.seed.to_le_bytes());
        hasher.update(text.as_bytes());
        Ok(unit_vector_from_digest(&hasher.finalize(), self.dim))
    }
}

/// Geometry-planting encoder for controlled retrieval experiments.
///
/// Every video id is assigned an anchor through a correspondence map;
/// frames and captions of the same anchor land on the same basis
/// vector, perturbed by an optional noise level below 1. With zero
/// noise and an injective correspondence, retrieval is perfect by
/// construction.
#[derive(Debug, Clone)]
pub struct PlantedEncoder {
    dim: usize,
    noise: f64,
    seed: u64,
    anchor_of: BTreeMap<String, usize>,
}

impl PlantedEncoder {
    /// `correspondence` maps each video id to an anchor label; distinct
    /// labels get orthogonal basis vectors. Fails when there are more
    /// labels than dimensions or when `noise` leaves `[0, 1)`.
    pub fn new(
        dim: usize,
        noise: f64,
        seed: u64,
        correspondence: &BTreeMap<String, String>,
    ) -> Result<Self, EncodeError> {
        check_dim(dim)?;
        if !(0.0..1.0).contains(&noise) {
            return Err(EncodeError::InvalidNoise { value: noise });
        }
        let labels: alloc::collections::BTreeSet<&String> = correspondence.values().collect();
        if labels.len() > dim {
            return Err(EncodeError::TooManyAnchors {
                needed: labels.len(),
                dim,
            });
        }
        let index_of: BTreeMap<&String, usize> =
            labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let anchor_of = correspondence
            .iter()
            .map(|(video, label)| (video.clone(), index_of[label]))
            .collect();
        Ok(Self {
            dim,
            noise,
            seed,
            anchor_of,
        })
    }

    fn embed(&self, tag: &[u8], source: SourceId<'_>) -> Result<Vec<f32>, EncodeError> {
        let &anchor = self
            .anchor_of
            .get(source.video_id)
            .ok_or_else(|| EncodeError::UnknownSource {
                id: String::from(source.video_id),
            })?;
        let mut v = vec![0.0f32; self.dim];
        v[anchor] = 1.0;
        if self.noise == 0.0 {
            return Ok(v);
        }
        let mut hasher = Sha256::new();
        hasher.update(tag);
        hasher.update(self.seed.to_le_bytes());
        hasher.update(source.video_id.as_bytes());
        hasher.update((source.index as u64).to_le_bytes());
        let noise_dir = unit_vector_from_digest(&hasher.finalize(), self.dim);
        for (slot, n) in v.iter_mut().zip(&noise_dir) {
            *slot = ((1.0 - self.noise) * *slot as f64 + self.noise * *n as f64) as f32;
        }
        if l2_normalize(&mut v).is_err() {
            v[anchor] = 1.0;
        }
        Ok(v)
    }
}

impl EncoderBackend for PlantedEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_frame(
        &mut self,
        _frame: &RgbFrame,
        _mask: &BinaryMask,
        source: SourceId<'_>,
    ) -> Result<Vec<f32>, EncodeError> {
        self.embed(b"fda.planted.frame\0", source)
    }

    fn encode_text(&mut self, _text: &str, source: SourceId<'_>) -> Result<Vec<f32>, EncodeError> {
        self.embed(b"fda.planted.text\0", source)
    }
}
