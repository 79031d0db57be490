//! Seeded random-input builders for differential and property tests.
//!
//! Everything draws from [`SplitMix64`] so failures reproduce from a
//! single seed. Constructed values go through the public validating
//! constructors, so generated inputs are always structurally legal.

use fda_core::{BinaryMask, DiffMap, GrayFrame, GroundTruth, SimilarityMatrix, SplitMix64};

/// Random binary mask with roughly `density` white pixels.
pub fn random_mask(rng: &mut SplitMix64, width: u32, height: u32, density: f64) -> BinaryMask {
    let values = (0..width as usize * height as usize)
        .map(|_| if rng.next_f64() < density { 255 } else { 0 })
        .collect();
    BinaryMask::new(width, height, values).unwrap()
}

/// Random grayscale frame with independent uniform pixels.
pub fn random_gray(rng: &mut SplitMix64, width: u32, height: u32) -> GrayFrame {
    let pixels = (0..width as usize * height as usize)
        .map(|_| rng.next_below(256) as u8)
        .collect();
    GrayFrame::new(width, height, pixels).unwrap()
}

/// Random difference map with independent uniform values.
pub fn random_diff(rng: &mut SplitMix64, width: u32, height: u32) -> DiffMap {
    let values = (0..width as usize * height as usize)
        .map(|_| rng.next_below(256) as u8)
        .collect();
    DiffMap::new(width, height, values).unwrap()
}

/// Random score matrix with entries uniform in `[lo, hi)`.
pub fn random_sim(
    rng: &mut SplitMix64,
    n_videos: usize,
    n_texts: usize,
    lo: f64,
    hi: f64,
) -> SimilarityMatrix {
    let values = (0..n_videos * n_texts)
        .map(|_| lo + (hi - lo) * rng.next_f64())
        .collect();
    SimilarityMatrix::new(n_videos, n_texts, values).unwrap()
}

/// Random score matrix quantized to `levels` distinct values, which
/// makes score ties likely.
pub fn random_sim_quantized(
    rng: &mut SplitMix64,
    n_videos: usize,
    n_texts: usize,
    levels: u64,
) -> SimilarityMatrix {
    assert!(levels > 0);
    let values = (0..n_videos * n_texts)
        .map(|_| rng.next_below(levels) as f64 / levels as f64)
        .collect();
    SimilarityMatrix::new(n_videos, n_texts, values).unwrap()
}

/// Random ground truth where every video keeps at least one caption.
///
/// Requires `n_texts >= n_videos`: the first `n_videos` assignments
/// cover every video, the rest land on random videos, and the whole
/// list is shuffled so coverage position is not predictable.
pub fn random_truth(rng: &mut SplitMix64, n_videos: usize, n_texts: usize) -> GroundTruth {
    assert!(n_videos > 0 && n_texts >= n_videos);
    let mut assignment: Vec<usize> = (0..n_texts)
        .map(|t| {
            if t < n_videos {
                t
            } else {
                rng.next_below(n_videos as u64) as usize
            }
        })
        .collect();
    for i in (1..assignment.len()).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        assignment.swap(i, j);
    }
    GroundTruth::from_text_to_video(assignment, n_videos).unwrap()
}
