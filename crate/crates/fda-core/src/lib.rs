//! Motion-masked video retrieval core.
//!
//! This crate implements the non-neural half of a masked-frame
//! text-video retrieval system: dynamic-region masks derived from
//! frame differences, a pluggable frame/text encoder interface with
//! average-pool video aggregation, the symmetric contrastive training
//! objective with exact gradients, and rank-based retrieval metrics.
//!
//! Everything here is `no_std + alloc` and fully deterministic; file
//! formats, processes, and the CLI live in the companion `fda-cli`
//! crate.
//!
//! Module map:
//! * [`raster`]: frames, diff maps, binary masks, grayscale conversion.
//! * [`sampling`]: uniform temporal frame sampling.
//! * [`maskgen`]: binarization and the morphological clean-up chain.
//! * [`encode`]: embeddings, pooling, mock and planted backends.
//! * [`retrieval`]: similarity matrices, contrastive loss, metrics.
//! * [`synthetic`]: moving-square clips with known ground-truth masks.
//! * [`rng`]: the deterministic generator shared by the above.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod encode;
pub mod maskgen;
pub mod raster;
pub mod retrieval;
pub mod rng;
pub mod sampling;
pub mod synthetic;

pub use encode::{
    apply_mask, cosine_similarity, l2_normalize, pool_average, EncodeError, EncoderBackend,
    MockEncoder, PlantedEncoder, SourceId, MIN_DIM,
};
pub use maskgen::{
    binarize, filter_components, frame_diff, generate_masks, mean_white_fraction, median_filter,
    morph_close, morph_open, refine_mask, resize_mask, Connectivity, MaskConfig, MaskError,
};
pub use raster::{
    to_grayscale, BinaryMask, DiffMap, FrameSequence, GrayFrame, RasterError, RgbFrame,
};
pub use retrieval::{
    evaluate, rank_of_target, similarity_matrix, symmetric_ce_grad, symmetric_ce_loss,
    DirectionReport, GroundTruth, RetrievalError, RetrievalReport, SimilarityMatrix,
};
pub use rng::SplitMix64;
pub use sampling::{sample_uniform, SampleError};
pub use synthetic::{generate_moving_square, MovingSquareConfig, SyntheticClip, SyntheticError};
