//! End-to-end orchestration: evaluation runs, threshold sweeps, mask
//! export, and store packing.
//!
//! A run processes every test-split video of the manifest: load the
//! frame files, sample the configured number of frames, convert to
//! grayscale, derive dynamic-region masks, encode each (frame, mask)
//! pair, and average-pool the results into one video embedding. All
//! captions are encoded as texts, the cosine similarity matrix is
//! scored both ways, and the report lands in
//! `<output_dir>/report.json`. Outputs are written atomically and are
//! byte-identical across reruns of the same config and seed.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use fda_core::{
    evaluate, generate_masks, pool_average, sample_uniform, similarity_matrix, to_grayscale,
    BinaryMask, EncodeError, EncoderBackend, GroundTruth, MaskError, MockEncoder, PlantedEncoder,
    RetrievalError, RetrievalReport, RgbFrame, SampleError, SourceId,
};
use serde::Deserialize;

use crate::config::{BackendConfig, ConfigError, RunConfig};
use crate::external::ExternalBackend;
use crate::ingest::{load_frame_sequence, IngestError};
use crate::manifest::{DatasetManifest, ManifestEntry, ManifestError, Split};
use crate::pnm;
use crate::store::{EmbeddingStore, StoreBackend, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("mask generation failed: {0}")]
    Mask(#[from] MaskError),
    #[error("frame sampling failed: {0}")]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("evaluation failed: {0}")]
    Retrieval(#[from] RetrievalError),
    #[error("manifest has no test-split videos")]
    NoTestVideos,
    #[error("video '{video_id}' is not in the manifest")]
    UnknownVideo { video_id: String },
    #[error("sweep needs at least one threshold")]
    NoThresholds,
    #[error("cannot write {path}: {source}")]
    WriteOutput {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot read {path}: {source}")]
    ReadInput {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path} is not valid embedding JSON: {source}")]
    BadPackInput {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl HarnessError {
    /// Process exit code: 1 for usage/config errors, 2 for data
    /// errors, 3 for backend failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::NoThresholds => 1,
            HarnessError::Encode(_) => 3,
            _ => 2,
        }
    }
}

/// Builds the encoder named by the config. The planted backend pairs
/// each test video with its own anchor, so retrieval is solvable by
/// construction; the run seed feeds the backends that consume
/// randomness.
pub fn build_backend(
    config: &RunConfig,
    manifest: &DatasetManifest,
) -> Result<Box<dyn EncoderBackend>, HarnessError> {
    Ok(match &config.backend {
        BackendConfig::Mock { dim } => Box::new(MockEncoder::new(*dim, config.seed)?),
        BackendConfig::Planted { dim, noise } => {
            let correspondence: BTreeMap<String, String> = manifest
                .split_entries(Split::Test)
                .map(|e| (e.video_id.clone(), e.video_id.clone()))
                .collect();
            Box::new(PlantedEncoder::new(
                *dim,
                *noise,
                config.seed,
                &correspondence,
            )?)
        }
        BackendConfig::Store { path } => Box::new(StoreBackend::open(path)?),
        BackendConfig::External { command, args, dim } => {
            Box::new(ExternalBackend::spawn(command, args, *dim)?)
        }
    })
}

/// A scored evaluation plus the mean white fraction of every mask the
/// run generated.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: RetrievalReport,
    pub white_fraction: f64,
}

fn sampled_frames_and_masks(
    entry: &ManifestEntry,
    config: &RunConfig,
) -> Result<(Vec<RgbFrame>, Vec<BinaryMask>), HarnessError> {
    let seq = load_frame_sequence(&entry.frame_dir, &config.frame_pattern, &entry.video_id)?;
    let n = match entry.split {
        Split::Train => config.n_frames_train,
        Split::Test => config.n_frames_test,
    };
    let indices = sample_uniform(seq.len(), n)?;
    let sampled: Vec<RgbFrame> = indices.iter().map(|&i| seq.frames()[i].clone()).collect();
    let grays: Vec<_> = sampled.iter().map(to_grayscale).collect();
    let masks = generate_masks(&grays, &config.mask)?;
    Ok((sampled, masks))
}

/// Runs the pipeline over the test split and scores both retrieval
/// directions. Pure except for reading frame files.
pub fn evaluate_split(
    manifest: &DatasetManifest,
    config: &RunConfig,
    backend: &mut dyn EncoderBackend,
) -> Result<EvalOutcome, HarnessError> {
    let entries: Vec<&ManifestEntry> = manifest.split_entries(Split::Test).collect();
    if entries.is_empty() {
        return Err(HarnessError::NoTestVideos);
    }

    let mut video_embs = Vec::with_capacity(entries.len());
    let mut text_embs = Vec::new();
    let mut text_to_video = Vec::new();
    let mut white_sum = 0.0;
    let mut mask_count = 0usize;
    for (v, entry) in entries.iter().enumerate() {
        let (frames, masks) = sampled_frames_and_masks(entry, config)?;
        white_sum += masks.iter().map(BinaryMask::white_fraction).sum::<f64>();
        mask_count += masks.len();

        let mut frame_embs = Vec::with_capacity(frames.len());
        for (k, (frame, mask)) in frames.iter().zip(&masks).enumerate() {
            let source = SourceId {
                video_id: &entry.video_id,
                index: k,
            };
            frame_embs.push(backend.encode_frame(frame, mask, source)?);
        }
        video_embs.push(pool_average(&frame_embs)?);

        for (j, caption) in entry.captions.iter().enumerate() {
            let source = SourceId {
                video_id: &entry.video_id,
                index: j,
            };
            text_embs.push(backend.encode_text(caption, source)?);
            text_to_video.push(v);
        }
    }

    let sim = similarity_matrix(&video_embs, &text_embs)?;
    let truth = GroundTruth::from_text_to_video(text_to_video, video_embs.len())?;
    Ok(EvalOutcome {
        report: evaluate(&sim, &truth)?,
        white_fraction: white_sum / mask_count as f64,
    })
}

/// Serialized form of a report file: pretty JSON plus a final newline.
pub fn report_bytes(report: &RetrievalReport) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes to JSON");
    bytes.push(b'\n');
    bytes
}

/// Full evaluation run: score the test split and write
/// `<output_dir>/report.json`. Returns the report and its path.
pub fn run_eval(config: &RunConfig) -> Result<(RetrievalReport, PathBuf), HarnessError> {
    let manifest = DatasetManifest::load(&config.manifest_path)?;
    let mut backend = build_backend(config, &manifest)?;
    let outcome = evaluate_split(&manifest, config, backend.as_mut())?;
    let path = config.output_dir.join("report.json");
    write_output(&path, &report_bytes(&outcome.report))?;
    Ok((outcome.report, path))
}

/// One threshold's result within a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tau: u8,
    pub t2v_r_at_1: f64,
    pub v2t_r_at_1: f64,
    pub white_fraction: f64,
}

/// Renders sweep rows as CSV with a header line.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("tau,t2v_r_at_1,v2t_r_at_1,white_fraction\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.tau, row.t2v_r_at_1, row.v2t_r_at_1, row.white_fraction
        ));
    }
    out
}

/// Reruns the evaluation once per threshold and writes
/// `<output_dir>/sweep.csv`. The backend is reused across thresholds;
/// only the binarization threshold changes between rows.
pub fn tau_sweep(config: &RunConfig, taus: &[u8]) -> Result<(Vec<SweepRow>, PathBuf), HarnessError> {
    if taus.is_empty() {
        return Err(HarnessError::NoThresholds);
    }
    let manifest = DatasetManifest::load(&config.manifest_path)?;
    let mut backend = build_backend(config, &manifest)?;
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut swept = config.clone();
        swept.mask.tau = tau;
        let outcome = evaluate_split(&manifest, &swept, backend.as_mut())?;
        rows.push(SweepRow {
            tau,
            t2v_r_at_1: outcome.report.t2v.r_at_1,
            v2t_r_at_1: outcome.report.v2t.r_at_1,
            white_fraction: outcome.white_fraction,
        });
    }
    let path = config.output_dir.join("sweep.csv");
    write_output(&path, sweep_csv(&rows).as_bytes())?;
    Ok((rows, path))
}

/// Writes one P5 graymap per sampled frame of `video_id` into
/// `<output_dir>/masks/<video_id>_<index>.pgm`, where the index counts
/// positions in the sampled frame list.
pub fn export_masks(config: &RunConfig, video_id: &str) -> Result<Vec<PathBuf>, HarnessError> {
    let manifest = DatasetManifest::load(&config.manifest_path)?;
    let entry = manifest
        .entry(video_id)
        .ok_or_else(|| HarnessError::UnknownVideo {
            video_id: video_id.to_owned(),
        })?;
    let (_, masks) = sampled_frames_and_masks(entry, config)?;
    let dir = config.output_dir.join("masks");
    let mut paths = Vec::with_capacity(masks.len());
    for (i, mask) in masks.iter().enumerate() {
        let path = dir.join(format!("{video_id}_{i}.pgm"));
        write_output(&path, &pnm::encode_mask(mask))?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Deserialize)]
struct PackInput {
    dim: usize,
    records: BTreeMap<String, Vec<f32>>,
}

/// Builds a store file from JSON input of the form
/// `{"dim": D, "records": {"id": [floats], ...}}`. Returns the record
/// count and dimension.
pub fn pack_store(input: &Path, output: &Path) -> Result<(usize, usize), HarnessError> {
    let text = std::fs::read_to_string(input).map_err(|source| HarnessError::ReadInput {
        path: input.display().to_string(),
        source,
    })?;
    let parsed: PackInput =
        serde_json::from_str(&text).map_err(|source| HarnessError::BadPackInput {
            path: input.display().to_string(),
            source,
        })?;
    let mut store = EmbeddingStore::new(parsed.dim)?;
    for (id, values) in parsed.records {
        store.insert(id, values)?;
    }
    store.save(output)?;
    Ok((store.len(), store.dim()))
}

/// Summarizes a store file: header fields, then one line per record
/// with its L2 norm.
pub fn inspect_store(path: &Path) -> Result<String, HarnessError> {
    let store = EmbeddingStore::load(path)?;
    let mut out = format!("dim {}\nrecords {}\n", store.dim(), store.len());
    for id in store.ids() {
        let values = store.get(id).expect("listed ids resolve");
        let norm = values
            .iter()
            .map(|&v| v as f64 * v as f64)
            .sum::<f64>()
            .sqrt();
        out.push_str(&format!("{id} norm {norm:.6}\n"));
    }
    Ok(out)
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let wrap = |source: io::Error| HarnessError::WriteOutput {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(wrap)?;
    }
    crate::write_atomic(path, bytes).map_err(wrap)
}
