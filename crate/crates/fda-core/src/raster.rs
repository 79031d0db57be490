//! Raster image types shared across the pipeline.
//!
//! All rasters are row-major with the origin at the top-left corner and
//! 8-bit samples. [`BinaryMask`] additionally guarantees that every value
//! is either 0 (background) or 255 (foreground).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Errors produced when constructing or combining rasters.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RasterError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    ZeroDimension { width: u32, height: u32 },
    #[error("pixel buffer holds {got} values, expected {expected}")]
    PixelCountMismatch { expected: usize, got: usize },
    #[error("mask value {value} is neither 0 nor 255")]
    NotBinary { value: u8 },
    #[error("dimensions differ: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: u32,
        a_height: u32,
        b_width: u32,
        b_height: u32,
    },
    #[error("frame sequence is empty")]
    EmptySequence,
}

fn check_dims(width: u32, height: u32) -> Result<usize, RasterError> {
    if width == 0 || height == 0 {
        return Err(RasterError::ZeroDimension { width, height });
    }
    Ok(width as usize * height as usize)
}

pub(crate) fn ensure_same_dims(
    a_width: u32,
    a_height: u32,
    b_width: u32,
    b_height: u32,
) -> Result<(), RasterError> {
    if a_width != b_width || a_height != b_height {
        return Err(RasterError::DimensionMismatch {
            a_width,
            a_height,
            b_width,
            b_height,
        });
    }
    Ok(())
}

/// An 8-bit RGB image stored as row-major `(R, G, B)` triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbFrame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RgbFrame {
    /// Builds a frame from interleaved RGB bytes (`3 * width * height` of them).
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RasterError> {
        let expected = check_dims(width, height)? * 3;
        if pixels.len() != expected {
            return Err(RasterError::PixelCountMismatch {
                expected,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// A frame where every pixel has the same RGB value.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, RasterError> {
        let n = check_dims(width, height)?;
        let mut pixels = Vec::with_capacity(n * 3);
        for _ in 0..n {
            pixels.extend_from_slice(&rgb);
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Interleaved RGB bytes, row-major.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }
}

/// An 8-bit single-channel (luma) image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayFrame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayFrame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RasterError> {
        let expected = check_dims(width, height)?;
        if pixels.len() != expected {
            return Err(RasterError::PixelCountMismatch {
                expected,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self, RasterError> {
        let n = check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            pixels: vec![value; n],
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        self.pixels[y as usize * self.width as usize + x as usize] = value;
    }
}

/// Per-pixel absolute difference between two grayscale frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffMap {
    width: u32,
    height: u32,
    values: Vec<u8>,
}

impl DiffMap {
    pub fn new(width: u32, height: u32, values: Vec<u8>) -> Result<Self, RasterError> {
        let expected = check_dims(width, height)?;
        if values.len() != expected {
            return Err(RasterError::PixelCountMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// A binary raster whose values are restricted to `{0, 255}`.
///
/// 255 marks foreground (dynamic region), 0 marks background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    values: Vec<u8>,
}

impl BinaryMask {
    /// Builds a mask from raw bytes, rejecting any value other than 0 or 255.
    pub fn new(width: u32, height: u32, values: Vec<u8>) -> Result<Self, RasterError> {
        let expected = check_dims(width, height)?;
        if values.len() != expected {
            return Err(RasterError::PixelCountMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some(&value) = values.iter().find(|&&v| v != 0 && v != 255) {
            return Err(RasterError::NotBinary { value });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Mask construction for internal operators that guarantee binary output.
    pub(crate) fn from_binary_unchecked(width: u32, height: u32, values: Vec<u8>) -> Self {
        debug_assert_eq!(values.len(), width as usize * height as usize);
        debug_assert!(values.iter().all(|&v| v == 0 || v == 255));
        Self {
            width,
            height,
            values,
        }
    }

    /// An all-white (`white = true`) or all-black mask.
    pub fn filled(width: u32, height: u32, white: bool) -> Result<Self, RasterError> {
        let n = check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            values: vec![if white { 255 } else { 0 }; n],
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn is_white(&self, x: u32, y: u32) -> bool {
        self.get(x, y) == 255
    }

    pub fn white_pixel_count(&self) -> usize {
        self.values.iter().filter(|&&v| v == 255).count()
    }

    /// Fraction of white pixels in `[0, 1]`.
    pub fn white_fraction(&self) -> f64 {
        self.white_pixel_count() as f64 / self.values.len() as f64
    }

    /// True when every white pixel of `self` is also white in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .all(|(&a, &b)| a == 0 || b == 255)
    }

    /// Intersection-over-union of the white regions; two all-black
    /// masks count as identical (IoU 1).
    pub fn iou(&self, other: &BinaryMask) -> Result<f64, RasterError> {
        ensure_same_dims(self.width, self.height, other.width, other.height)?;
        let mut intersection = 0usize;
        let mut union = 0usize;
        for (&a, &b) in self.values.iter().zip(other.values.iter()) {
            if a == 255 && b == 255 {
                intersection += 1;
            }
            if a == 255 || b == 255 {
                union += 1;
            }
        }
        if union == 0 {
            return Ok(1.0);
        }
        Ok(intersection as f64 / union as f64)
    }
}

/// An ordered list of same-sized RGB frames from one video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSequence {
    source_id: String,
    frames: Vec<RgbFrame>,
}

impl FrameSequence {
    /// Validates that the list is nonempty and all frames share one size.
    pub fn new(source_id: String, frames: Vec<RgbFrame>) -> Result<Self, RasterError> {
        let first = frames.first().ok_or(RasterError::EmptySequence)?;
        let (w, h) = (first.width(), first.height());
        for frame in &frames {
            ensure_same_dims(w, h, frame.width(), frame.height())?;
        }
        Ok(Self { source_id, frames })
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn frames(&self) -> &[RgbFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> u32 {
        self.frames[0].width()
    }

    pub fn height(&self) -> u32 {
        self.frames[0].height()
    }
}

/// Converts an RGB frame to grayscale with ITU-R BT.601 luma weights.
///
/// `luma = round(0.299 R + 0.587 G + 0.114 B)`, rounding half up.
pub fn to_grayscale(frame: &RgbFrame) -> GrayFrame {
    let mut pixels = Vec::with_capacity(frame.width() as usize * frame.height() as usize);
    for rgb in frame.pixels().chunks_exact(3) {
        let luma = 0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64;
        // f64 -> u8 casts saturate, which doubles as the clamp to [0, 255].
        pixels.push((luma + 0.5) as u8);
    }
    GrayFrame {
        width: frame.width(),
        height: frame.height(),
        pixels,
    }
}
