//! Similarity matrices, the symmetric contrastive objective, and
//! retrieval metrics.
//!
//! A [`SimilarityMatrix`] holds cosine scores with videos as rows and
//! texts as columns. On square matrices whose diagonal pairs are the
//! positives, [`symmetric_ce_loss`] averages the video-to-text and
//! text-to-video cross-entropy terms; [`symmetric_ce_grad`] is its
//! exact derivative. [`evaluate`] turns a matrix plus ground truth into
//! recall, median-rank, and mean-rank numbers for both directions.
//!
//! Ranking uses the strictly-greater rule: ties never worsen a rank,
//! and a query with several positives scores its best-ranked one.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::encode::EncodeError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RetrievalError {
    #[error("matrix must have at least one video and one text")]
    EmptyMatrix,
    #[error("expected {expected} values for the matrix, got {got}")]
    ValueCountMismatch { expected: usize, got: usize },
    #[error("value at row {row}, column {col} is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("loss needs a square matrix, got {n_videos} videos x {n_texts} texts")]
    NotSquare { n_videos: usize, n_texts: usize },
    #[error("similarity scale must be finite and positive, got {value}")]
    InvalidScale { value: f64 },
    #[error("{kind} embedding {index} has zero norm")]
    ZeroNormEmbedding { kind: &'static str, index: usize },
    #[error("query has no positive indices")]
    EmptyPositives,
    #[error("positive index {index} out of range for {bound} candidates")]
    PositiveOutOfRange { index: usize, bound: usize },
    #[error("ground truth covers {got} texts but the matrix has {expected}")]
    TextCountMismatch { expected: usize, got: usize },
    #[error("ground truth covers {got} videos but the matrix has {expected}")]
    VideoCountMismatch { expected: usize, got: usize },
    #[error("video {video} has no associated texts")]
    NoPositivesForVideo { video: usize },
    #[error("cannot compute metrics over zero queries")]
    NoQueries,
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// Dense row-major score matrix: `get(i, j)` is the similarity of
/// video `i` and text `j`. All values are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n_videos: usize,
    n_texts: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(n_videos: usize, n_texts: usize, values: Vec<f64>) -> Result<Self, RetrievalError> {
        if n_videos == 0 || n_texts == 0 {
            return Err(RetrievalError::EmptyMatrix);
        }
        if values.len() != n_videos * n_texts {
            return Err(RetrievalError::ValueCountMismatch {
                expected: n_videos * n_texts,
                got: values.len(),
            });
        }
        for (pos, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(RetrievalError::NonFinite {
                    row: pos / n_texts,
                    col: pos % n_texts,
                });
            }
        }
        Ok(Self {
            n_videos,
            n_texts,
            values,
        })
    }

    pub fn from_fn(
        n_videos: usize,
        n_texts: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, RetrievalError> {
        let mut values = Vec::with_capacity(n_videos * n_texts);
        for i in 0..n_videos {
            for j in 0..n_texts {
                values.push(f(i, j));
            }
        }
        Self::new(n_videos, n_texts, values)
    }

    pub fn n_videos(&self) -> usize {
        self.n_videos
    }

    pub fn n_texts(&self) -> usize {
        self.n_texts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, video: usize, text: usize) -> f64 {
        self.values[video * self.n_texts + text]
    }

    /// Scores of one video against every text.
    pub fn video_row(&self, video: usize) -> &[f64] {
        &self.values[video * self.n_texts..(video + 1) * self.n_texts]
    }

    /// Scores of one text against every video, gathered from the column.
    pub fn text_column(&self, text: usize) -> Vec<f64> {
        (0..self.n_videos).map(|i| self.get(i, text)).collect()
    }
}

/// Cosine similarities of every video embedding against every text
/// embedding. Zero-norm embeddings are rejected: they have no
/// direction to compare.
pub fn similarity_matrix(
    video_embs: &[Vec<f32>],
    text_embs: &[Vec<f32>],
) -> Result<SimilarityMatrix, RetrievalError> {
    if video_embs.is_empty() || text_embs.is_empty() {
        return Err(RetrievalError::EmptyMatrix);
    }
    let dim = video_embs[0].len();
    let norms = |embs: &[Vec<f32>], kind: &'static str| -> Result<Vec<f64>, RetrievalError> {
        embs.iter()
            .enumerate()
            .map(|(index, e)| {
                if e.len() != dim {
                    return Err(EncodeError::DimensionMismatch {
                        expected: dim,
                        got: e.len(),
                    }
                    .into());
                }
                let n = libm::sqrt(e.iter().map(|&x| x as f64 * x as f64).sum::<f64>());
                if n == 0.0 {
                    return Err(RetrievalError::ZeroNormEmbedding { kind, index });
                }
                Ok(n)
            })
            .collect()
    };
    let video_norms = norms(video_embs, "video")?;
    let text_norms = norms(text_embs, "text")?;

    let mut values = Vec::with_capacity(video_embs.len() * text_embs.len());
    for (v, vn) in video_embs.iter().zip(&video_norms) {
        for (t, tn) in text_embs.iter().zip(&text_norms) {
            let dot: f64 = v.iter().zip(t).map(|(&a, &b)| a as f64 * b as f64).sum();
            values.push(dot / (vn * tn));
        }
    }
    SimilarityMatrix::new(video_embs.len(), text_embs.len(), values)
}

fn check_scale(scale: f64) -> Result<(), RetrievalError> {
    if !scale.is_finite() || scale <= 0.0 {
        return Err(RetrievalError::InvalidScale { value: scale });
    }
    Ok(())
}

fn check_square(sim: &SimilarityMatrix) -> Result<usize, RetrievalError> {
    if sim.n_videos != sim.n_texts {
        return Err(RetrievalError::NotSquare {
            n_videos: sim.n_videos,
            n_texts: sim.n_texts,
        });
    }
    Ok(sim.n_videos)
}

/// `log(sum(exp(scale * x)))` computed against the running maximum so
/// large scores cannot overflow.
fn log_sum_exp_scaled(values: impl Iterator<Item = f64> + Clone, scale: f64) -> f64 {
    let max = values
        .clone()
        .fold(f64::NEG_INFINITY, |m, v| m.max(scale * v));
    let sum: f64 = values.map(|v| libm::exp(scale * v - max)).sum();
    max + libm::log(sum)
}

fn softmax_scaled(values: &[f64], scale: f64) -> Vec<f64> {
    let max = values
        .iter()
        .fold(f64::NEG_INFINITY, |m, &v| m.max(scale * v));
    let exps: Vec<f64> = values.iter().map(|&v| libm::exp(scale * v - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Symmetric cross-entropy over a square batch with diagonal
/// positives: the mean of the video-to-text (per row) and
/// text-to-video (per column) terms.
///
/// `scale` multiplies every score before the softmax; 1.0 applies the
/// objective to raw similarities.
pub fn symmetric_ce_loss(sim: &SimilarityMatrix, scale: f64) -> Result<f64, RetrievalError> {
    check_scale(scale)?;
    let b = check_square(sim)?;
    let mut total = 0.0f64;
    for i in 0..b {
        let row = sim.video_row(i);
        total += log_sum_exp_scaled(row.iter().copied(), scale) - scale * row[i];
    }
    for j in 0..b {
        let col = sim.text_column(j);
        total += log_sum_exp_scaled(col.iter().copied(), scale) - scale * col[j];
    }
    Ok(total / (2.0 * b as f64))
}

/// Exact gradient of [`symmetric_ce_loss`] with respect to every
/// matrix entry, returned in the same shape as the input.
pub fn symmetric_ce_grad(
    sim: &SimilarityMatrix,
    scale: f64,
) -> Result<SimilarityMatrix, RetrievalError> {
    check_scale(scale)?;
    let b = check_square(sim)?;
    let mut grad = vec![0.0f64; b * b];
    for i in 0..b {
        let p = softmax_scaled(sim.video_row(i), scale);
        for j in 0..b {
            grad[i * b + j] += p[j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..b {
        let q = softmax_scaled(&sim.text_column(j), scale);
        for (i, qi) in q.iter().enumerate() {
            grad[i * b + j] += qi - if i == j { 1.0 } else { 0.0 };
        }
    }
    let factor = scale / (2.0 * b as f64);
    for g in grad.iter_mut() {
        *g *= factor;
    }
    SimilarityMatrix::new(b, b, grad)
}

/// Positive-pair relation for one evaluation batch: each text has
/// exactly one correct video, each video owns a nonempty caption set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub text_to_video: Vec<usize>,
    pub video_to_texts: Vec<Vec<usize>>,
}

impl GroundTruth {
    /// Derives the video-to-texts side by inverting the per-text
    /// assignment; fails when a video ends up with no captions.
    pub fn from_text_to_video(
        text_to_video: Vec<usize>,
        n_videos: usize,
    ) -> Result<Self, RetrievalError> {
        let mut video_to_texts = vec![Vec::new(); n_videos];
        for (text, &video) in text_to_video.iter().enumerate() {
            if video >= n_videos {
                return Err(RetrievalError::PositiveOutOfRange {
                    index: video,
                    bound: n_videos,
                });
            }
            video_to_texts[video].push(text);
        }
        if let Some(video) = video_to_texts.iter().position(Vec::is_empty) {
            return Err(RetrievalError::NoPositivesForVideo { video });
        }
        Ok(Self {
            text_to_video,
            video_to_texts,
        })
    }

    /// One-to-one pairing: text `i` belongs to video `i`.
    pub fn diagonal(n: usize) -> Self {
        Self {
            text_to_video: (0..n).collect(),
            video_to_texts: (0..n).map(|i| vec![i]).collect(),
        }
    }
}

/// Competition rank of the best positive: `1 +` the number of
/// candidates scoring strictly higher. Ties never worsen a rank.
pub fn rank_of_target(scores: &[f64], positives: &[usize]) -> Result<u64, RetrievalError> {
    if positives.is_empty() {
        return Err(RetrievalError::EmptyPositives);
    }
    let mut best = u64::MAX;
    for &p in positives {
        if p >= scores.len() {
            return Err(RetrievalError::PositiveOutOfRange {
                index: p,
                bound: scores.len(),
            });
        }
        let beaten = scores.iter().filter(|&&s| s > scores[p]).count() as u64;
        best = best.min(1 + beaten);
    }
    Ok(best)
}

/// Recall and rank statistics for one retrieval direction. Recalls are
/// percentages; the median is the lower median for even query counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionReport {
    pub r_at_1: f64,
    pub r_at_5: f64,
    pub r_at_10: f64,
    pub median_rank: u64,
    pub mean_rank: f64,
}

impl DirectionReport {
    pub fn from_ranks(ranks: &[u64]) -> Result<Self, RetrievalError> {
        if ranks.is_empty() {
            return Err(RetrievalError::NoQueries);
        }
        let n = ranks.len() as f64;
        let recall = |k: u64| 100.0 * ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        let mut sorted = ranks.to_vec();
        sorted.sort_unstable();
        Ok(Self {
            r_at_1: recall(1),
            r_at_5: recall(5),
            r_at_10: recall(10),
            median_rank: sorted[(sorted.len() - 1) / 2],
            mean_rank: ranks.iter().sum::<u64>() as f64 / n,
        })
    }
}

/// Both retrieval directions plus their aggregate score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub t2v: DirectionReport,
    pub v2t: DirectionReport,
    pub meta_sum: f64,
}

impl RetrievalReport {
    /// Combines the two directions; `meta_sum` is the sum of all six
    /// recall values.
    pub fn new(t2v: DirectionReport, v2t: DirectionReport) -> Self {
        let meta_sum =
            t2v.r_at_1 + t2v.r_at_5 + t2v.r_at_10 + v2t.r_at_1 + v2t.r_at_5 + v2t.r_at_10;
        Self { t2v, v2t, meta_sum }
    }
}

/// Scores a similarity matrix against ground truth.
///
/// Text-to-video ranks each text's single positive video within its
/// column; video-to-text ranks each video's best caption within its
/// row.
pub fn evaluate(
    sim: &SimilarityMatrix,
    truth: &GroundTruth,
) -> Result<RetrievalReport, RetrievalError> {
    if truth.text_to_video.len() != sim.n_texts {
        return Err(RetrievalError::TextCountMismatch {
            expected: sim.n_texts,
            got: truth.text_to_video.len(),
        });
    }
    if truth.video_to_texts.len() != sim.n_videos {
        return Err(RetrievalError::VideoCountMismatch {
            expected: sim.n_videos,
            got: truth.video_to_texts.len(),
        });
    }

    let mut t2v_ranks = Vec::with_capacity(sim.n_texts);
    for (text, &video) in truth.text_to_video.iter().enumerate() {
        t2v_ranks.push(rank_of_target(&sim.text_column(text), &[video])?);
    }
    let mut v2t_ranks = Vec::with_capacity(sim.n_videos);
    for (video, texts) in truth.video_to_texts.iter().enumerate() {
        if texts.is_empty() {
            return Err(RetrievalError::NoPositivesForVideo { video });
        }
        v2t_ranks.push(rank_of_target(sim.video_row(video), texts)?);
    }

    Ok(RetrievalReport::new(
        DirectionReport::from_ranks(&t2v_ranks)?,
        DirectionReport::from_ranks(&v2t_ranks)?,
    ))
}
