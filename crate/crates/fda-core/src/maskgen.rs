//! Dynamic-region mask generation from grayscale frame pairs.
//!
//! The pipeline turns consecutive frames into a binary motion mask:
//! absolute frame difference, threshold binarization, then a fixed
//! post-processing chain of morphological closing, opening, median
//! filtering, and small-component removal.
//!
//! Border conventions:
//! * dilation treats pixels outside the image as background (0),
//! * erosion treats pixels outside the image as foreground (255),
//! * the median filter replicates the nearest edge pixel.
//!
//! The asymmetric dilate/erode padding keeps the operators dual, so
//! opening stays anti-extensive, closing stays extensive, and both are
//! idempotent on every input, including at the image border.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::raster::{ensure_same_dims, BinaryMask, DiffMap, GrayFrame, RasterError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaskError {
    #[error("structuring element side must be odd and positive, got {side}")]
    EvenKernel { side: u32 },
    #[error("connectivity must be 4 or 8, got {value}")]
    InvalidConnectivity { value: u8 },
    #[error("resize target must be at least 1x1, got {width}x{height}")]
    ZeroTargetDimension { width: u32, height: u32 },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Pixel adjacency used for connected-component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    Four,
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = MaskError;

    fn try_from(value: u8) -> Result<Self, MaskError> {
        match value {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            _ => Err(MaskError::InvalidConnectivity { value }),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

/// Parameters of the mask pipeline.
///
/// Defaults: threshold 25, closing kernel 5, opening kernel 3, median
/// kernel 3, minimum component area 50 pixels, 8-connectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskConfig {
    /// Binarization threshold; a diff value must exceed it to count as motion.
    pub tau: u8,
    /// Side of the square closing kernel (odd).
    pub close_kernel: u32,
    /// Side of the square opening kernel (odd).
    pub open_kernel: u32,
    /// Side of the square median-filter kernel (odd).
    pub median_kernel: u32,
    /// Connected components smaller than this many pixels are dropped.
    pub min_area: u32,
    /// Adjacency rule for component labeling.
    pub connectivity: Connectivity,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            tau: 25,
            close_kernel: 5,
            open_kernel: 3,
            median_kernel: 3,
            min_area: 50,
            connectivity: Connectivity::Eight,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<(), MaskError> {
        for side in [self.close_kernel, self.open_kernel, self.median_kernel] {
            check_kernel(side)?;
        }
        Ok(())
    }
}

fn check_kernel(side: u32) -> Result<u32, MaskError> {
    if side == 0 || side % 2 == 0 {
        return Err(MaskError::EvenKernel { side });
    }
    Ok((side - 1) / 2)
}

/// Absolute per-pixel difference of two same-sized grayscale frames.
pub fn frame_diff(prev: &GrayFrame, cur: &GrayFrame) -> Result<DiffMap, MaskError> {
    ensure_same_dims(prev.width(), prev.height(), cur.width(), cur.height())?;
    let values = prev
        .pixels()
        .iter()
        .zip(cur.pixels())
        .map(|(&a, &b)| a.abs_diff(b))
        .collect();
    Ok(DiffMap::new(prev.width(), prev.height(), values).expect("dimensions already validated"))
}

/// Thresholds a diff map into a binary mask: white where `D > tau`.
///
/// `tau == 0` is special-cased to an all-white mask, so the zero
/// threshold degenerates to the unmasked baseline instead of leaving
/// zero-difference pixels black under the strict inequality.
pub fn binarize(diff: &DiffMap, tau: u8) -> BinaryMask {
    let values = if tau == 0 {
        vec![255u8; diff.values().len()]
    } else {
        diff.values()
            .iter()
            .map(|&d| if d > tau { 255 } else { 0 })
            .collect()
    };
    BinaryMask::from_binary_unchecked(diff.width(), diff.height(), values)
}

/// One separable pass of a running max (dilate) or min (erode).
///
/// `radius` pixels on each side; out-of-range neighbors are skipped,
/// which realizes background padding for max and foreground padding
/// for min.
fn separable_pass(
    src: &[u8],
    width: usize,
    height: usize,
    radius: usize,
    horizontal: bool,
    take_max: bool,
) -> Vec<u8> {
    let mut out = vec![0u8; src.len()];
    for y in 0..height {
        for x in 0..width {
            let (pos, limit) = if horizontal { (x, width) } else { (y, height) };
            let lo = pos.saturating_sub(radius);
            let hi = (pos + radius).min(limit - 1);
            let mut acc = if take_max { 0u8 } else { 255u8 };
            for k in lo..=hi {
                let v = if horizontal {
                    src[y * width + k]
                } else {
                    src[k * width + x]
                };
                if take_max {
                    if v == 255 {
                        acc = 255;
                        break;
                    }
                } else if v == 0 {
                    acc = 0;
                    break;
                }
            }
            out[y * width + x] = acc;
        }
    }
    out
}

fn dilate(mask: &BinaryMask, radius: u32) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h, r) = (mask.width() as usize, mask.height() as usize, radius as usize);
    let tmp = separable_pass(mask.values(), w, h, r, true, true);
    let out = separable_pass(&tmp, w, h, r, false, true);
    BinaryMask::from_binary_unchecked(mask.width(), mask.height(), out)
}

fn erode(mask: &BinaryMask, radius: u32) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h, r) = (mask.width() as usize, mask.height() as usize, radius as usize);
    let tmp = separable_pass(mask.values(), w, h, r, true, false);
    let out = separable_pass(&tmp, w, h, r, false, false);
    BinaryMask::from_binary_unchecked(mask.width(), mask.height(), out)
}

/// Morphological closing (dilate then erode) with a square kernel.
///
/// Fills holes and gaps narrower than the kernel.
pub fn morph_close(mask: &BinaryMask, kernel_side: u32) -> Result<BinaryMask, MaskError> {
    let radius = check_kernel(kernel_side)?;
    Ok(erode(&dilate(mask, radius), radius))
}

/// Morphological opening (erode then dilate) with a square kernel.
///
/// Removes specks and protrusions narrower than the kernel.
pub fn morph_open(mask: &BinaryMask, kernel_side: u32) -> Result<BinaryMask, MaskError> {
    let radius = check_kernel(kernel_side)?;
    Ok(dilate(&erode(mask, radius), radius))
}

/// Majority-vote median filter for binary masks.
///
/// The window is clamped to the image by replicating the nearest edge
/// pixel, so every vote uses exactly `kernel^2` samples.
pub fn median_filter(mask: &BinaryMask, kernel_side: u32) -> Result<BinaryMask, MaskError> {
    let radius = check_kernel(kernel_side)? as i64;
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let votes = (kernel_side * kernel_side) as usize;
    let mut out = vec![0u8; mask.values().len()];
    for y in 0..h {
        for x in 0..w {
            let mut white = 0usize;
            for dy in -radius..=radius {
                let yy = (y + dy).clamp(0, h - 1);
                for dx in -radius..=radius {
                    let xx = (x + dx).clamp(0, w - 1);
                    if mask.values()[(yy * w + xx) as usize] == 255 {
                        white += 1;
                    }
                }
            }
            out[(y * w + x) as usize] = if white * 2 > votes { 255 } else { 0 };
        }
    }
    Ok(BinaryMask::from_binary_unchecked(
        mask.width(),
        mask.height(),
        out,
    ))
}

/// Removes white connected components whose area is below `min_area`.
///
/// Labeling is two-pass with union-find over provisional row labels.
pub fn filter_components(mask: &BinaryMask, min_area: u32, connectivity: Connectivity) -> BinaryMask {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let values = mask.values();
    let mut labels = vec![0u32; values.len()];
    let mut parent: Vec<u32> = vec![0]; // index 0 reserved for background

    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    fn union(parent: &mut Vec<u32>, a: u32, b: u32) {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi as usize] = lo;
        }
    }

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if values[i] != 255 {
                continue;
            }
            // Neighbors already scanned in row-major order.
            let mut neighbor = 0u32;
            let mut consider = |lbl: u32, parent: &mut Vec<u32>| {
                if lbl == 0 {
                    return;
                }
                if neighbor == 0 {
                    neighbor = lbl;
                } else {
                    union(parent, neighbor, lbl);
                }
            };
            if x > 0 {
                consider(labels[i - 1], &mut parent);
            }
            if y > 0 {
                consider(labels[i - w], &mut parent);
                if matches!(connectivity, Connectivity::Eight) {
                    if x > 0 {
                        consider(labels[i - w - 1], &mut parent);
                    }
                    if x + 1 < w {
                        consider(labels[i - w + 1], &mut parent);
                    }
                }
            }
            labels[i] = if neighbor == 0 {
                let fresh = parent.len() as u32;
                parent.push(fresh);
                fresh
            } else {
                neighbor
            };
        }
    }

    let mut area = vec![0u64; parent.len()];
    for &lbl in &labels {
        if lbl != 0 {
            let root = find(&mut parent, lbl);
            area[root as usize] += 1;
        }
    }

    let out = labels
        .iter()
        .map(|&lbl| {
            if lbl != 0 && area[find(&mut parent, lbl) as usize] >= min_area as u64 {
                255
            } else {
                0
            }
        })
        .collect();
    BinaryMask::from_binary_unchecked(mask.width(), mask.height(), out)
}

/// Applies the post-processing chain to a raw binarized mask:
/// closing, opening, median filtering, then component filtering.
pub fn refine_mask(mask: &BinaryMask, config: &MaskConfig) -> Result<BinaryMask, MaskError> {
    let closed = morph_close(mask, config.close_kernel)?;
    let opened = morph_open(&closed, config.open_kernel)?;
    let smoothed = median_filter(&opened, config.median_kernel)?;
    Ok(filter_components(
        &smoothed,
        config.min_area,
        config.connectivity,
    ))
}

/// Produces one dynamic-region mask per input frame.
///
/// Frame `t >= 1` gets the refined mask of `|frame_t - frame_{t-1}|`;
/// frame 0 reuses frame 1's mask so every frame stays encodable. A
/// single-frame sequence yields an all-white mask, since without motion
/// evidence the whole frame is kept.
pub fn generate_masks(
    frames: &[GrayFrame],
    config: &MaskConfig,
) -> Result<Vec<BinaryMask>, MaskError> {
    config.validate()?;
    let first = frames.first().ok_or(RasterError::EmptySequence)?;
    let (w, h) = (first.width(), first.height());
    for frame in frames {
        ensure_same_dims(w, h, frame.width(), frame.height())?;
    }
    if frames.len() == 1 {
        return Ok(vec![BinaryMask::filled(w, h, true)?]);
    }

    let mut masks = Vec::with_capacity(frames.len());
    for t in 1..frames.len() {
        let diff = frame_diff(&frames[t - 1], &frames[t])?;
        masks.push(refine_mask(&binarize(&diff, config.tau), config)?);
    }
    masks.insert(0, masks[0].clone());
    Ok(masks)
}

/// Nearest-neighbor resampling of a binary mask.
pub fn resize_mask(mask: &BinaryMask, out_w: u32, out_h: u32) -> Result<BinaryMask, MaskError> {
    if out_w == 0 || out_h == 0 {
        return Err(MaskError::ZeroTargetDimension {
            width: out_w,
            height: out_h,
        });
    }
    let (in_w, in_h) = (mask.width() as u64, mask.height() as u64);
    let mut values = Vec::with_capacity(out_w as usize * out_h as usize);
    for y in 0..out_h as u64 {
        let src_y = (y * in_h / out_h as u64) as u32;
        for x in 0..out_w as u64 {
            let src_x = (x * in_w / out_w as u64) as u32;
            values.push(mask.get(src_x, src_y));
        }
    }
    Ok(BinaryMask::from_binary_unchecked(out_w, out_h, values))
}

/// Mean white-pixel fraction over a batch of masks.
pub fn mean_white_fraction(masks: &[BinaryMask]) -> f64 {
    if masks.is_empty() {
        return 0.0;
    }
    masks.iter().map(BinaryMask::white_fraction).sum::<f64>() / masks.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(rows: &[&[u8]]) -> BinaryMask {
        let h = rows.len() as u32;
        let w = rows[0].len() as u32;
        let values = rows.iter().flat_map(|r| r.iter().copied()).collect();
        BinaryMask::new(w, h, values).unwrap()
    }

    #[test]
    fn diff_is_absolute() {
        let a = GrayFrame::filled(2, 2, 100).unwrap();
        let b = GrayFrame::filled(2, 2, 130).unwrap();
        assert!(frame_diff(&a, &b).unwrap().values().iter().all(|&v| v == 30));
        // no wraparound
        let c = GrayFrame::filled(2, 2, 250).unwrap();
        let d = GrayFrame::filled(2, 2, 10).unwrap();
        assert!(frame_diff(&c, &d).unwrap().values().iter().all(|&v| v == 240));
    }

    #[test]
    fn diff_of_identical_frames_is_zero() {
        let a = GrayFrame::filled(3, 3, 42).unwrap();
        assert!(frame_diff(&a, &a).unwrap().values().iter().all(|&v| v == 0));
    }

    #[test]
    fn diff_is_symmetric() {
        let a = GrayFrame::new(2, 2, vec![0, 80, 160, 240]).unwrap();
        let b = GrayFrame::new(2, 2, vec![255, 10, 170, 3]).unwrap();
        assert_eq!(frame_diff(&a, &b).unwrap(), frame_diff(&b, &a).unwrap());
    }

    #[test]
    fn diff_rejects_dimension_mismatch() {
        let a = GrayFrame::filled(2, 2, 0).unwrap();
        let b = GrayFrame::filled(3, 2, 0).unwrap();
        assert!(matches!(frame_diff(&a, &b), Err(MaskError::Raster(_))));
    }

    #[test]
    fn binarize_uses_strict_inequality() {
        let diff = DiffMap::new(2, 1, vec![30, 25]).unwrap();
        assert_eq!(binarize(&diff, 25).values(), &[255, 0]);
    }

    #[test]
    fn binarize_zero_threshold_is_all_white() {
        let diff = DiffMap::new(2, 2, vec![0, 0, 5, 200]).unwrap();
        assert!(binarize(&diff, 0).values().iter().all(|&v| v == 255));
    }

    #[test]
    fn binarize_is_monotone_in_threshold() {
        let diff = DiffMap::new(4, 4, (0u8..16).map(|v| v * 16).collect()).unwrap();
        for tau in 1..255u8 {
            let tighter = binarize(&diff, tau + 1);
            let looser = binarize(&diff, tau);
            assert!(tighter.is_subset_of(&looser));
            assert!(tighter.is_subset_of(&binarize(&diff, 0)));
        }
    }

    #[test]
    fn closing_fills_single_hole() {
        let mut rows = vec![vec![255u8; 7]; 7];
        rows[3][3] = 0;
        let holed = mask_from(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
        let closed = morph_close(&holed, 3).unwrap();
        assert!(closed.values().iter().all(|&v| v == 255));
    }

    #[test]
    fn closing_of_empty_mask_is_empty() {
        let empty = BinaryMask::filled(6, 4, false).unwrap();
        assert_eq!(morph_close(&empty, 5).unwrap(), empty);
    }

    #[test]
    fn kernel_one_is_identity() {
        let m = mask_from(&[&[0, 255, 0], &[255, 0, 255], &[0, 255, 0]]);
        assert_eq!(morph_close(&m, 1).unwrap(), m);
        assert_eq!(morph_open(&m, 1).unwrap(), m);
        assert_eq!(median_filter(&m, 1).unwrap(), m);
    }

    #[test]
    fn even_kernel_rejected() {
        let m = BinaryMask::filled(3, 3, true).unwrap();
        for side in [0u32, 2, 4] {
            assert_eq!(
                morph_close(&m, side).unwrap_err(),
                MaskError::EvenKernel { side }
            );
            assert!(morph_open(&m, side).is_err());
            assert!(median_filter(&m, side).is_err());
        }
    }

    #[test]
    fn opening_removes_isolated_pixel() {
        let mut rows = vec![vec![0u8; 9]; 9];
        rows[4][4] = 255;
        let speck = mask_from(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
        let opened = morph_open(&speck, 3).unwrap();
        assert!(opened.values().iter().all(|&v| v == 0));
    }

    #[test]
    fn opening_preserves_solid_mask() {
        // Erosion pads with foreground at the border, so a fully white
        // mask is a fixed point of opening (and of closing).
        let solid = BinaryMask::filled(8, 5, true).unwrap();
        assert_eq!(morph_open(&solid, 3).unwrap(), solid);
        assert_eq!(morph_close(&solid, 3).unwrap(), solid);
    }

    #[test]
    fn median_removes_speck_and_small_block() {
        let mut rows = vec![vec![0u8; 9]; 9];
        rows[4][4] = 255;
        let speck = mask_from(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
        assert!(median_filter(&speck, 3).unwrap().values().iter().all(|&v| v == 0));

        let mut rows = vec![vec![0u8; 9]; 9];
        rows[4][4] = 255;
        rows[4][5] = 255;
        rows[5][4] = 255;
        rows[5][5] = 255;
        let block = mask_from(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
        // every window sees at most 4 of 9 white pixels
        assert!(median_filter(&block, 3).unwrap().values().iter().all(|&v| v == 0));
    }

    #[test]
    fn median_keeps_solid_mask() {
        let solid = BinaryMask::filled(5, 5, true).unwrap();
        assert_eq!(median_filter(&solid, 3).unwrap(), solid);
    }

    #[test]
    fn component_filter_uses_strict_area_cutoff() {
        // 7x7 block = 49 pixels: dropped at min_area 50.
        let mut rows = vec![vec![0u8; 12]; 12];
        for y in 2..9 {
            for x in 2..9 {
                rows[y][x] = 255;
            }
        }
        let m49 = mask_from(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
        assert_eq!(
            filter_components(&m49, 50, Connectivity::Eight).white_pixel_count(),
            0
        );
        // one more pixel makes 50: kept.
        rows[2][9] = 255;
        let m50 = mask_from(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
        assert_eq!(
            filter_components(&m50, 50, Connectivity::Eight).white_pixel_count(),
            50
        );
    }

    #[test]
    fn component_filter_min_area_zero_is_identity() {
        let m = mask_from(&[&[255, 0, 255], &[0, 0, 0], &[255, 0, 0]]);
        assert_eq!(filter_components(&m, 0, Connectivity::Four), m);
    }

    #[test]
    fn connectivity_changes_diagonal_merging() {
        // two diagonal pixels: one component of area 2 under 8-conn,
        // two components of area 1 under 4-conn.
        let m = mask_from(&[&[255, 0], &[0, 255]]);
        assert_eq!(filter_components(&m, 2, Connectivity::Eight).white_pixel_count(), 2);
        assert_eq!(filter_components(&m, 2, Connectivity::Four).white_pixel_count(), 0);
    }

    #[test]
    fn connectivity_parses_from_integers() {
        assert_eq!(Connectivity::try_from(4).unwrap(), Connectivity::Four);
        assert_eq!(Connectivity::try_from(8).unwrap(), Connectivity::Eight);
        assert!(matches!(
            Connectivity::try_from(6),
            Err(MaskError::InvalidConnectivity { value: 6 })
        ));
    }

    #[test]
    fn masks_for_identical_frames_are_black() {
        let frames = vec![GrayFrame::filled(16, 16, 90).unwrap(); 2];
        let masks = generate_masks(&frames, &MaskConfig::default()).unwrap();
        assert_eq!(masks.len(), 2);
        assert!(masks.iter().all(|m| m.white_pixel_count() == 0));
    }

    #[test]
    fn zero_tau_yields_all_white_masks() {
        let frames = vec![
            GrayFrame::filled(8, 8, 10).unwrap(),
            GrayFrame::filled(8, 8, 200).unwrap(),
            GrayFrame::filled(8, 8, 10).unwrap(),
        ];
        let config = MaskConfig {
            tau: 0,
            ..MaskConfig::default()
        };
        let masks = generate_masks(&frames, &config).unwrap();
        assert_eq!(masks.len(), 3);
        assert!(masks.iter().all(|m| m.white_fraction() == 1.0));
    }

    #[test]
    fn first_mask_copies_second() {
        let frames = vec![
            GrayFrame::filled(32, 32, 0).unwrap(),
            GrayFrame::filled(32, 32, 255).unwrap(),
            GrayFrame::filled(32, 32, 255).unwrap(),
        ];
        let masks = generate_masks(&frames, &MaskConfig::default()).unwrap();
        assert_eq!(masks[0], masks[1]);
        // second diff is zero, so the third mask is black while the
        // first two are fully white
        assert_eq!(masks[1].white_fraction(), 1.0);
        assert_eq!(masks[2].white_pixel_count(), 0);
    }

    #[test]
    fn single_frame_gets_all_white_mask() {
        let frames = vec![GrayFrame::filled(4, 4, 77).unwrap()];
        let masks = generate_masks(&frames, &MaskConfig::default()).unwrap();
        assert_eq!(masks.len(), 1);
        assert_eq!(masks[0].white_fraction(), 1.0);
    }

    #[test]
    fn generate_rejects_empty_input() {
        assert!(matches!(
            generate_masks(&[], &MaskConfig::default()),
            Err(MaskError::Raster(RasterError::EmptySequence))
        ));
    }

    #[test]
    fn resize_doubles_into_blocks() {
        let m = mask_from(&[&[255, 0], &[0, 255]]);
        let r = resize_mask(&m, 4, 4).unwrap();
        let expected = mask_from(&[
            &[255, 255, 0, 0],
            &[255, 255, 0, 0],
            &[0, 0, 255, 255],
            &[0, 0, 255, 255],
        ]);
        assert_eq!(r, expected);
    }

    #[test]
    fn resize_to_same_size_is_identity() {
        let m = mask_from(&[&[255, 0, 255], &[0, 255, 0]]);
        assert_eq!(resize_mask(&m, 3, 2).unwrap(), m);
    }

    #[test]
    fn resize_keeps_solid_masks_solid() {
        let m = BinaryMask::filled(3, 5, true).unwrap();
        let r = resize_mask(&m, 11, 2).unwrap();
        assert!(r.values().iter().all(|&v| v == 255));
        assert!(matches!(
            resize_mask(&m, 0, 2),
            Err(MaskError::ZeroTargetDimension { .. })
        ));
    }
}
