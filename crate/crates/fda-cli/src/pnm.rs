//! Binary portable-anymap codec: P6 pixmaps for RGB frames and P5
//! graymaps for masks and grayscale frames.
//!
//! Only 8-bit rasters (maxval 255) are supported. Headers may contain
//! `#` comments; exactly one whitespace byte separates the maxval from
//! the raster, so raster bytes that happen to look like whitespace are
//! preserved.

use std::fs;
use std::io;
use std::path::Path;

use fda_core::{BinaryMask, GrayFrame, RasterError, RgbFrame};

#[derive(Debug, thiserror::Error)]
pub enum PnmError {
    #[error("unsupported raster magic {found:?}; expected P5 or P6")]
    UnsupportedMagic { found: String },
    #[error("malformed header field {field:?}")]
    BadHeaderField { field: String },
    #[error("missing header field before byte {offset}")]
    UnexpectedEnd { offset: usize },
    #[error("only maxval 255 is supported, got {maxval}")]
    UnsupportedMaxval { maxval: u32 },
    #[error("raster data truncated: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("raster dimensions overflow the address space")]
    TooLarge,
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

fn is_pnm_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r' | b'\n' | 0x0b | 0x0c)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if is_pnm_space(b) {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8], PnmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !is_pnm_space(self.bytes[self.pos])
            && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(PnmError::UnexpectedEnd { offset: start });
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Result<u32, PnmError> {
        let token = self.token()?;
        let text = std::str::from_utf8(token).map_err(|_| PnmError::BadHeaderField {
            field: String::from_utf8_lossy(token).into_owned(),
        })?;
        text.parse().map_err(|_| PnmError::BadHeaderField {
            field: text.to_string(),
        })
    }

    /// Consumes the single whitespace byte that ends the header.
    fn raster(&mut self) -> Result<&'a [u8], PnmError> {
        if self.pos >= self.bytes.len() || !is_pnm_space(self.bytes[self.pos]) {
            return Err(PnmError::UnexpectedEnd { offset: self.pos });
        }
        Ok(&self.bytes[self.pos + 1..])
    }
}

fn parse_header<'a>(bytes: &'a [u8], magic: &str) -> Result<(u32, u32, &'a [u8]), PnmError> {
    let mut cursor = Cursor { bytes, pos: 0 };
    let found = cursor.token()?;
    if found != magic.as_bytes() {
        return Err(PnmError::UnsupportedMagic {
            found: String::from_utf8_lossy(found).into_owned(),
        });
    }
    let width = cursor.number()?;
    let height = cursor.number()?;
    let maxval = cursor.number()?;
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval { maxval });
    }
    let raster = cursor.raster()?;
    Ok((width, height, raster))
}

fn take_exact(raster: &[u8], expected: usize) -> Result<&[u8], PnmError> {
    if raster.len() < expected {
        return Err(PnmError::Truncated {
            expected,
            got: raster.len(),
        });
    }
    Ok(&raster[..expected])
}

fn pixel_count(width: u32, height: u32, channels: usize) -> Result<usize, PnmError> {
    (width as usize)
        .checked_mul(height as usize)
        .and_then(|n| n.checked_mul(channels))
        .ok_or(PnmError::TooLarge)
}

fn magic_of(bytes: &[u8]) -> &str {
    if bytes.starts_with(b"P5") {
        "P5"
    } else {
        "P6"
    }
}

/// Decodes a P6 pixmap, or a P5 graymap promoted to RGB by channel
/// replication.
pub fn decode_frame(bytes: &[u8]) -> Result<RgbFrame, PnmError> {
    match magic_of(bytes) {
        "P5" => {
            let gray = decode_graymap(bytes)?;
            let rgb = gray
                .pixels()
                .iter()
                .flat_map(|&v| [v, v, v])
                .collect::<Vec<u8>>();
            Ok(RgbFrame::new(gray.width(), gray.height(), rgb)?)
        }
        _ => {
            let (width, height, raster) = parse_header(bytes, "P6")?;
            let expected = pixel_count(width, height, 3)?;
            let data = take_exact(raster, expected)?;
            Ok(RgbFrame::new(width, height, data.to_vec())?)
        }
    }
}

/// Decodes a P5 graymap.
pub fn decode_graymap(bytes: &[u8]) -> Result<GrayFrame, PnmError> {
    let (width, height, raster) = parse_header(bytes, "P5")?;
    let expected = pixel_count(width, height, 1)?;
    let data = take_exact(raster, expected)?;
    Ok(GrayFrame::new(width, height, data.to_vec())?)
}

/// Encodes an RGB frame as a binary P6 pixmap.
pub fn encode_p6(frame: &RgbFrame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.pixels());
    out
}

/// Encodes raw 8-bit values as a binary P5 graymap.
pub fn encode_p5(width: u32, height: u32, values: &[u8]) -> Vec<u8> {
    debug_assert_eq!(values.len(), width as usize * height as usize);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(values);
    out
}

/// Encodes a binary mask as a P5 graymap (white 255, black 0).
pub fn encode_mask(mask: &BinaryMask) -> Vec<u8> {
    encode_p5(mask.width(), mask.height(), mask.values())
}

/// Reads and decodes one frame file (P6, or P5 promoted to RGB).
pub fn read_frame(path: &Path) -> Result<RgbFrame, PnmError> {
    let bytes = fs::read(path).map_err(|source| PnmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_frame(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p6_roundtrip_is_bit_exact() {
        let frame = RgbFrame::new(2, 2, (0u8..12).collect()).unwrap();
        let encoded = encode_p6(&frame);
        assert_eq!(decode_frame(&encoded).unwrap(), frame);
    }

    #[test]
    fn p5_roundtrip_and_promotion() {
        let values = vec![0u8, 10, 200, 255, 32, 99];
        let encoded = encode_p5(3, 2, &values);
        let gray = decode_graymap(&encoded).unwrap();
        assert_eq!(gray.pixels(), values.as_slice());
        let rgb = decode_frame(&encoded).unwrap();
        assert_eq!(rgb.get(1, 0), [10, 10, 10]);
    }

    #[test]
    fn whitespace_looking_raster_bytes_survive() {
        // 10 is '\n' and 32 is ' '; the single-separator rule must not
        // swallow them
        let values = vec![10u8, 32, 10, 32];
        let encoded = encode_p5(2, 2, &values);
        assert_eq!(decode_graymap(&encoded).unwrap().pixels(), values.as_slice());
    }

    #[test]
    fn header_comments_are_skipped() {
        let bytes = b"P5 # a comment\n# another\n 2 1\n255\n\x01\x02".to_vec();
        let gray = decode_graymap(&bytes).unwrap();
        assert_eq!((gray.width(), gray.height()), (2, 1));
        assert_eq!(gray.pixels(), &[1, 2]);
    }

    #[test]
    fn wrong_magic_rejected() {
        assert!(matches!(
            decode_frame(b"P3\n1 1\n255\n abc"),
            Err(PnmError::UnsupportedMagic { .. })
        ));
        assert!(matches!(
            decode_graymap(b"P6\n1 1\n255\n\x01\x01\x01"),
            Err(PnmError::UnsupportedMagic { .. })
        ));
    }

    #[test]
    fn non_255_maxval_rejected() {
        assert!(matches!(
            decode_graymap(b"P5\n1 1\n65535\n\x00\x00"),
            Err(PnmError::UnsupportedMaxval { maxval: 65535 })
        ));
    }

    #[test]
    fn truncated_raster_rejected() {
        let err = decode_frame(b"P6\n2 2\n255\n\x00\x00\x00").unwrap_err();
        assert!(matches!(
            err,
            PnmError::Truncated {
                expected: 12,
                got: 3
            }
        ));
    }

    #[test]
    fn malformed_header_rejected() {
        assert!(matches!(
            decode_graymap(b"P5\nwide 1\n255\n\x00"),
            Err(PnmError::BadHeaderField { .. })
        ));
        assert!(matches!(
            decode_graymap(b"P5\n1"),
            Err(PnmError::UnexpectedEnd { .. })
        ));
        // zero dimension flows through as a raster error
        assert!(matches!(
            decode_graymap(b"P5\n0 1\n255\n"),
            Err(PnmError::Raster(_))
        ));
    }

    #[test]
    fn mask_encoding_uses_p5() {
        let mask = BinaryMask::new(2, 1, vec![255, 0]).unwrap();
        let encoded = encode_mask(&mask);
        assert!(encoded.starts_with(b"P5\n2 1\n255\n"));
        assert_eq!(&encoded[encoded.len() - 2..], &[255, 0]);
    }

    #[test]
    fn read_frame_reports_missing_file() {
        let err = read_frame(Path::new("/nonexistent/frame.ppm")).unwrap_err();
        assert!(matches!(err, PnmError::Io { .. }));
    }
}
