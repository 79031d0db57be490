//! Uniform frame index sampling.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SampleError {
    #[error("cannot sample from an empty sequence")]
    NoFrames,
    #[error("requested sample count must be at least 1")]
    ZeroCount,
}

/// Picks `n` evenly spaced frame indices out of `total_frames`.
///
/// When `total_frames >= n` the indices are `floor(i * total_frames / n)`
/// for `i in 0..n`, which always includes index 0 and is strictly
/// increasing. When the sequence is shorter than `n`, every index is
/// returned once; duplicating frames would only add all-zero differences.
pub fn sample_uniform(total_frames: usize, n: usize) -> Result<Vec<usize>, SampleError> {
    if total_frames == 0 {
        return Err(SampleError::NoFrames);
    }
    if n == 0 {
        return Err(SampleError::ZeroCount);
    }
    if total_frames <= n {
        return Ok((0..total_frames).collect());
    }
    Ok((0..n)
        .map(|i| (i as u128 * total_frames as u128 / n as u128) as usize)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spreads_indices_over_long_sequence() {
        assert_eq!(sample_uniform(100, 6).unwrap(), &[0, 16, 33, 50, 66, 83]);
    }

    #[test]
    fn exact_fit_returns_identity() {
        assert_eq!(sample_uniform(6, 6).unwrap(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn short_sequence_keeps_all_frames() {
        assert_eq!(sample_uniform(4, 12).unwrap(), &[0, 1, 2, 3]);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert_eq!(sample_uniform(0, 6), Err(SampleError::NoFrames));
        assert_eq!(sample_uniform(6, 0), Err(SampleError::ZeroCount));
    }

    #[test]
    fn indices_strictly_increasing_and_in_range() {
        for total in 1..200usize {
            for n in 1..20usize {
                let indices = sample_uniform(total, n).unwrap();
                assert_eq!(indices.len(), n.min(total));
                assert_eq!(indices[0], 0);
                assert!(indices.windows(2).all(|w| w[0] < w[1]));
                assert!(indices.iter().all(|&i| i < total));
            }
        }
    }
}
