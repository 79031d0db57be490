//! Brute-force reference implementations.
//!
//! Each function recomputes a library result from first principles:
//! morphology as explicit point-set unions and membership tests,
//! median filtering by sorting windows, component filtering by flood
//! fill, the contrastive loss without log-sum-exp rearrangement, its
//! gradient by central finite differences, and retrieval ranks by
//! sorting score lists. Padding conventions match the library:
//! dilation pads with background, erosion with foreground, the median
//! filter replicates edges.

use std::collections::BTreeSet;

use fda_core::{
    BinaryMask, Connectivity, DiffMap, DirectionReport, GrayFrame, GroundTruth, MaskConfig,
    RetrievalReport, SimilarityMatrix,
};

fn radius(kernel_side: u32) -> i64 {
    assert!(
        kernel_side % 2 == 1,
        "oracle called with even kernel side {kernel_side}"
    );
    (kernel_side / 2) as i64
}

fn white_set(mask: &BinaryMask) -> BTreeSet<(i64, i64)> {
    let mut set = BTreeSet::new();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.is_white(x, y) {
                set.insert((x as i64, y as i64));
            }
        }
    }
    set
}

fn mask_from_set(width: u32, height: u32, set: &BTreeSet<(i64, i64)>) -> BinaryMask {
    let mut values = vec![0u8; width as usize * height as usize];
    for &(x, y) in set {
        values[y as usize * width as usize + x as usize] = 255;
    }
    BinaryMask::new(width, height, values).expect("set positions are in bounds")
}

/// Thresholding recomputed per pixel; tau 0 means everything passes.
pub fn binarize_ref(diff: &DiffMap, tau: u8) -> BinaryMask {
    let mut values = Vec::with_capacity(diff.values().len());
    for &d in diff.values() {
        values.push(if tau == 0 || d > tau { 255 } else { 0 });
    }
    BinaryMask::new(diff.width(), diff.height(), values).unwrap()
}

/// Dilation as the union of the foreground set translated by every
/// kernel offset, clipped to the image.
pub fn dilate_ref(mask: &BinaryMask, kernel_side: u32) -> BinaryMask {
    let r = radius(kernel_side);
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut out = BTreeSet::new();
    for (x, y) in white_set(mask) {
        for dy in -r..=r {
            for dx in -r..=r {
                let (qx, qy) = (x + dx, y + dy);
                if qx >= 0 && qx < w && qy >= 0 && qy < h {
                    out.insert((qx, qy));
                }
            }
        }
    }
    mask_from_set(mask.width(), mask.height(), &out)
}

/// Erosion as a membership test: a pixel survives when every in-image
/// window position is foreground (positions outside count as white).
pub fn erode_ref(mask: &BinaryMask, kernel_side: u32) -> BinaryMask {
    let r = radius(kernel_side);
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let fg = white_set(mask);
    let mut out = BTreeSet::new();
    for y in 0..h {
        for x in 0..w {
            let mut keep = fg.contains(&(x, y));
            'window: for dy in -r..=r {
                for dx in -r..=r {
                    let (qx, qy) = (x + dx, y + dy);
                    let inside = qx >= 0 && qx < w && qy >= 0 && qy < h;
                    if inside && !fg.contains(&(qx, qy)) {
                        keep = false;
                        break 'window;
                    }
                }
            }
            if keep {
                out.insert((x, y));
            }
        }
    }
    mask_from_set(mask.width(), mask.height(), &out)
}

pub fn close_ref(mask: &BinaryMask, kernel_side: u32) -> BinaryMask {
    erode_ref(&dilate_ref(mask, kernel_side), kernel_side)
}

pub fn open_ref(mask: &BinaryMask, kernel_side: u32) -> BinaryMask {
    dilate_ref(&erode_ref(mask, kernel_side), kernel_side)
}

/// Median by literally sorting each replicate-padded window.
pub fn median_ref(mask: &BinaryMask, kernel_side: u32) -> BinaryMask {
    let r = radius(kernel_side);
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut values = Vec::with_capacity(mask.values().len());
    for y in 0..h {
        for x in 0..w {
            let mut window = Vec::new();
            for dy in -r..=r {
                for dx in -r..=r {
                    let qx = (x + dx).clamp(0, w - 1) as u32;
                    let qy = (y + dy).clamp(0, h - 1) as u32;
                    window.push(mask.get(qx, qy));
                }
            }
            window.sort_unstable();
            values.push(window[window.len() / 2]);
        }
    }
    BinaryMask::new(mask.width(), mask.height(), values).unwrap()
}

/// Component filtering by iterative flood fill from every unvisited
/// white pixel.
pub fn filter_components_ref(
    mask: &BinaryMask,
    min_area: u32,
    connectivity: Connectivity,
) -> BinaryMask {
    let offsets: &[(i64, i64)] = match connectivity {
        Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        Connectivity::Eight => &[
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ],
    };
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let fg = white_set(mask);
    let mut visited: BTreeSet<(i64, i64)> = BTreeSet::new();
    let mut kept = BTreeSet::new();
    for &start in &fg {
        if visited.contains(&start) {
            continue;
        }
        let mut component = vec![start];
        let mut stack = vec![start];
        visited.insert(start);
        while let Some((x, y)) = stack.pop() {
            for &(dx, dy) in offsets {
                let q = (x + dx, y + dy);
                if q.0 >= 0 && q.0 < w && q.1 >= 0 && q.1 < h && fg.contains(&q) && visited.insert(q)
                {
                    component.push(q);
                    stack.push(q);
                }
            }
        }
        if component.len() as u64 >= min_area as u64 {
            kept.extend(component);
        }
    }
    mask_from_set(mask.width(), mask.height(), &kept)
}

/// The full post-processing chain recomputed with the reference
/// operators.
pub fn refine_ref(mask: &BinaryMask, config: &MaskConfig) -> BinaryMask {
    let closed = close_ref(mask, config.close_kernel);
    let opened = open_ref(&closed, config.open_kernel);
    let smoothed = median_ref(&opened, config.median_kernel);
    filter_components_ref(&smoothed, config.min_area, config.connectivity)
}

/// End-to-end mask for one frame pair: absolute difference, threshold,
/// then the reference chain.
pub fn pair_mask_ref(prev: &GrayFrame, cur: &GrayFrame, config: &MaskConfig) -> BinaryMask {
    assert_eq!(prev.width(), cur.width());
    assert_eq!(prev.height(), cur.height());
    let mut diff = Vec::with_capacity(prev.pixels().len());
    for (&a, &b) in prev.pixels().iter().zip(cur.pixels()) {
        diff.push(if a > b { a - b } else { b - a });
    }
    let diff = DiffMap::new(prev.width(), prev.height(), diff).unwrap();
    refine_ref(&binarize_ref(&diff, config.tau), config)
}

/// The symmetric cross-entropy written out directly from the softmax
/// definition, with no log-sum-exp rearrangement. Scores must be small
/// enough that `exp` does not overflow; the test generators stay
/// within a few tens.
pub fn loss_ref(sim: &SimilarityMatrix, scale: f64) -> f64 {
    let b = sim.n_videos();
    assert_eq!(b, sim.n_texts(), "loss oracle needs a square matrix");
    let mut total = 0.0f64;
    for i in 0..b {
        let denom: f64 = (0..b).map(|j| (scale * sim.get(i, j)).exp()).sum();
        total += -((scale * sim.get(i, i)).exp() / denom).ln();
    }
    for j in 0..b {
        let denom: f64 = (0..b).map(|i| (scale * sim.get(i, j)).exp()).sum();
        total += -((scale * sim.get(j, j)).exp() / denom).ln();
    }
    total / (2.0 * b as f64)
}

/// Central finite differences of [`loss_ref`], row-major.
pub fn grad_fd(sim: &SimilarityMatrix, scale: f64, h: f64) -> Vec<f64> {
    let b = sim.n_videos();
    let mut grad = Vec::with_capacity(b * b);
    for i in 0..b {
        for j in 0..b {
            let perturbed = |delta: f64| {
                let mut values = sim.values().to_vec();
                values[i * b + j] += delta;
                SimilarityMatrix::new(b, b, values).unwrap()
            };
            let plus = loss_ref(&perturbed(h), scale);
            let minus = loss_ref(&perturbed(-h), scale);
            grad.push((plus - minus) / (2.0 * h));
        }
    }
    grad
}

/// Largest elementwise relative error, with tiny pairs treated as
/// equal.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let denom = x.abs().max(y.abs());
            if denom < 1e-12 {
                0.0
            } else {
                (x - y).abs() / denom
            }
        })
        .fold(0.0, f64::max)
}

/// Competition rank via descending sort: the first position at which
/// the target's score appears.
fn rank_sorted(scores: &[f64], positives: &[usize]) -> u64 {
    let mut order = scores.to_vec();
    order.sort_by(|a, b| b.partial_cmp(a).expect("scores are finite"));
    positives
        .iter()
        .map(|&p| {
            let pos = order
                .iter()
                .position(|&v| v == scores[p])
                .expect("target score is present in its own list");
            (pos + 1) as u64
        })
        .min()
        .expect("positives are nonempty")
}

fn direction_ref(ranks: &[u64]) -> DirectionReport {
    let n = ranks.len() as f64;
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    let recall = |k: u64| 100.0 * (ranks.iter().filter(|&&r| r <= k).count() as f64) / n;
    DirectionReport {
        r_at_1: recall(1),
        r_at_5: recall(5),
        r_at_10: recall(10),
        // lower median: the ceil(n/2)-th smallest rank
        median_rank: sorted[sorted.len().div_ceil(2) - 1],
        mean_rank: ranks.iter().sum::<u64>() as f64 / n,
    }
}

/// Retrieval metrics recomputed with sorted score lists.
pub fn evaluate_ref(sim: &SimilarityMatrix, truth: &GroundTruth) -> RetrievalReport {
    let t2v_ranks: Vec<u64> = truth
        .text_to_video
        .iter()
        .enumerate()
        .map(|(text, &video)| rank_sorted(&sim.text_column(text), &[video]))
        .collect();
    let v2t_ranks: Vec<u64> = truth
        .video_to_texts
        .iter()
        .enumerate()
        .map(|(video, texts)| rank_sorted(sim.video_row(video), texts))
        .collect();
    let t2v = direction_ref(&t2v_ranks);
    let v2t = direction_ref(&v2t_ranks);
    let meta_sum = t2v.r_at_1 + t2v.r_at_5 + t2v.r_at_10 + v2t.r_at_1 + v2t.r_at_5 + v2t.r_at_10;
    RetrievalReport { t2v, v2t, meta_sum }
}
