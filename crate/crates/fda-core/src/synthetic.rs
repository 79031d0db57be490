//! Synthetic clip generation for end-to-end pipeline checks.
//!
//! The generator renders a bright square translating over a darker
//! static background, with optional per-pixel additive noise, and also
//! reports the exact changed-pixel set between consecutive frames.
//! That set is the ideal dynamic-region mask, so pipeline output can
//! be scored against known truth without any real video data.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::raster::{BinaryMask, FrameSequence, RasterError, RgbFrame};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SyntheticError {
    #[error("clip must have at least one frame")]
    NoFrames,
    #[error("square side must be at least 1 pixel")]
    ZeroSide,
    #[error("square leaves the image bounds at frame {frame}")]
    OutOfBounds { frame: usize },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Parameters of the moving-square clip.
///
/// Defaults produce a 16-frame 128x128 sequence with a 16x16 square
/// moving 4 px right per frame and noise amplitude 12, small enough
/// that the default binarization threshold separates motion from
/// noise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MovingSquareConfig {
    pub width: u32,
    pub height: u32,
    pub n_frames: usize,
    pub square_side: u32,
    pub start_x: u32,
    pub start_y: u32,
    pub step_x: i32,
    pub step_y: i32,
    pub background: u8,
    pub foreground: u8,
    /// Uniform additive noise in `[-amplitude, +amplitude]` per pixel.
    pub noise_amplitude: u8,
    pub seed: u64,
}

impl Default for MovingSquareConfig {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            n_frames: 16,
            square_side: 16,
            start_x: 8,
            start_y: 56,
            step_x: 4,
            step_y: 0,
            background: 120,
            foreground: 230,
            noise_amplitude: 12,
            seed: 0x5eed,
        }
    }
}

/// Rendered frames together with the exact changed-pixel masks.
///
/// `truth_masks[t]` (t >= 1) marks pixels whose noiseless value
/// changes between frames `t-1` and `t`; the first entry copies the
/// second, mirroring how mask generation handles the first frame. A
/// single-frame clip gets an all-white truth mask for the same reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticClip {
    pub frames: Vec<RgbFrame>,
    pub truth_masks: Vec<BinaryMask>,
}

impl SyntheticClip {
    /// Wraps the frames as a named sequence for pipeline input.
    pub fn into_sequence(self, source_id: &str) -> FrameSequence {
        FrameSequence::new(String::from(source_id), self.frames)
            .expect("generated frames are nonempty and uniformly sized")
    }
}

fn square_origin(config: &MovingSquareConfig, frame: usize) -> (i64, i64) {
    (
        config.start_x as i64 + frame as i64 * config.step_x as i64,
        config.start_y as i64 + frame as i64 * config.step_y as i64,
    )
}

fn in_square(config: &MovingSquareConfig, frame: usize, x: u32, y: u32) -> bool {
    let (ox, oy) = square_origin(config, frame);
    let side = config.square_side as i64;
    (x as i64) >= ox && (x as i64) < ox + side && (y as i64) >= oy && (y as i64) < oy + side
}

/// Renders the clip described by `config`.
pub fn generate_moving_square(config: &MovingSquareConfig) -> Result<SyntheticClip, SyntheticError> {
    if config.n_frames == 0 {
        return Err(SyntheticError::NoFrames);
    }
    if config.square_side == 0 {
        return Err(SyntheticError::ZeroSide);
    }
    for t in 0..config.n_frames {
        let (ox, oy) = square_origin(config, t);
        let side = config.square_side as i64;
        if ox < 0 || oy < 0 || ox + side > config.width as i64 || oy + side > config.height as i64 {
            return Err(SyntheticError::OutOfBounds { frame: t });
        }
    }

    let mut rng = SplitMix64::new(config.seed);
    let amp = config.noise_amplitude as i32;
    let mut frames = Vec::with_capacity(config.n_frames);
    for t in 0..config.n_frames {
        let mut frame = RgbFrame::filled(config.width, config.height, [0, 0, 0])?;
        for y in 0..config.height {
            for x in 0..config.width {
                let base = if in_square(config, t, x, y) {
                    config.foreground
                } else {
                    config.background
                } as i32;
                let delta = rng.next_below(2 * amp as u64 + 1) as i32 - amp;
                let v = (base + delta).clamp(0, 255) as u8;
                // equal channels survive grayscale conversion unchanged
                frame.set(x, y, [v, v, v]);
            }
        }
        frames.push(frame);
    }

    let mut truth_masks = Vec::with_capacity(config.n_frames);
    if config.n_frames == 1 {
        truth_masks.push(BinaryMask::filled(config.width, config.height, true)?);
    } else {
        for t in 1..config.n_frames {
            let mut values = vec![0u8; config.width as usize * config.height as usize];
            for y in 0..config.height {
                for x in 0..config.width {
                    if in_square(config, t - 1, x, y) != in_square(config, t, x, y) {
                        values[y as usize * config.width as usize + x as usize] = 255;
                    }
                }
            }
            truth_masks.push(BinaryMask::new(config.width, config.height, values)?);
        }
        truth_masks.insert(0, truth_masks[0].clone());
    }

    Ok(SyntheticClip {
        frames,
        truth_masks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_clip_has_expected_shape() {
        let clip = generate_moving_square(&MovingSquareConfig::default()).unwrap();
        assert_eq!(clip.frames.len(), 16);
        assert_eq!(clip.truth_masks.len(), 16);
        assert_eq!(clip.frames[0].width(), 128);
        assert_eq!(clip.truth_masks[0], clip.truth_masks[1]);
    }

    #[test]
    fn truth_mask_is_the_two_strips() {
        // a 16x16 square moving 4 px leaves a 4x16 strip on each side
        let clip = generate_moving_square(&MovingSquareConfig::default()).unwrap();
        for mask in &clip.truth_masks {
            assert_eq!(mask.white_pixel_count(), 2 * 4 * 16);
        }
    }

    #[test]
    fn noise_stays_within_amplitude() {
        let config = MovingSquareConfig::default();
        let clip = generate_moving_square(&config).unwrap();
        for (t, frame) in clip.frames.iter().enumerate() {
            for y in 0..config.height {
                for x in 0..config.width {
                    let base = if in_square(&config, t, x, y) {
                        config.foreground
                    } else {
                        config.background
                    } as i32;
                    let v = frame.get(x, y)[0] as i32;
                    assert!((v - base).abs() <= config.noise_amplitude as i32);
                    assert_eq!(frame.get(x, y)[0], frame.get(x, y)[1]);
                    assert_eq!(frame.get(x, y)[1], frame.get(x, y)[2]);
                }
            }
        }
    }

    #[test]
    fn zero_noise_renders_flat_regions() {
        let config = MovingSquareConfig {
            noise_amplitude: 0,
            ..MovingSquareConfig::default()
        };
        let clip = generate_moving_square(&config).unwrap();
        let corner = clip.frames[3].get(0, 0);
        assert_eq!(corner, [120, 120, 120]);
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let config = MovingSquareConfig::default();
        let a = generate_moving_square(&config).unwrap();
        let b = generate_moving_square(&config).unwrap();
        assert_eq!(a, b);
        let c = generate_moving_square(&MovingSquareConfig {
            seed: 999,
            ..config
        })
        .unwrap();
        assert_ne!(a.frames, c.frames);
    }

    #[test]
    fn runaway_square_is_rejected() {
        let config = MovingSquareConfig {
            step_x: 32,
            ..MovingSquareConfig::default()
        };
        assert!(matches!(
            generate_moving_square(&config),
            Err(SyntheticError::OutOfBounds { .. })
        ));
        assert!(matches!(
            generate_moving_square(&MovingSquareConfig {
                n_frames: 0,
                ..MovingSquareConfig::default()
            }),
            Err(SyntheticError::NoFrames)
        ));
    }

    #[test]
    fn single_frame_truth_is_all_white() {
        let config = MovingSquareConfig {
            n_frames: 1,
            ..MovingSquareConfig::default()
        };
        let clip = generate_moving_square(&config).unwrap();
        assert_eq!(clip.truth_masks.len(), 1);
        assert_eq!(clip.truth_masks[0].white_fraction(), 1.0);
    }

    #[test]
    fn sequence_wrapper_keeps_the_id() {
        let clip = generate_moving_square(&MovingSquareConfig::default()).unwrap();
        let seq = clip.into_sequence("clip0");
        assert_eq!(seq.source_id(), "clip0");
        assert_eq!(seq.len(), 16);
    }
}
