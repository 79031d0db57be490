//! Fixture builders shared by the integration suites: synthetic clips
//! rendered to frame files, manifests describing them, and run
//! configs pointing at both.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use fda_cli::pnm;
use fda_core::{generate_moving_square, MovingSquareConfig};

/// A fast 32x32 clip: 8 frames of an 8x8 square stepping 2 px right.
pub fn small_clip(seed: u64) -> MovingSquareConfig {
    MovingSquareConfig {
        width: 32,
        height: 32,
        n_frames: 8,
        square_side: 8,
        start_x: 2,
        start_y: 12,
        step_x: 2,
        step_y: 0,
        background: 100,
        foreground: 220,
        noise_amplitude: 10,
        seed,
    }
}

/// A minimal 16x16 clip for tests that repeat many runs.
pub fn tiny_clip(seed: u64) -> MovingSquareConfig {
    MovingSquareConfig {
        width: 16,
        height: 16,
        n_frames: 8,
        square_side: 6,
        start_x: 1,
        start_y: 5,
        step_x: 1,
        step_y: 0,
        background: 100,
        foreground: 220,
        noise_amplitude: 10,
        seed,
    }
}

/// Renders `clip` into `dir` as zero-padded P6 frame files.
pub fn write_clip(dir: &Path, clip: &MovingSquareConfig) {
    std::fs::create_dir_all(dir).unwrap();
    let rendered = generate_moving_square(clip).unwrap();
    for (i, frame) in rendered.frames.iter().enumerate() {
        std::fs::write(dir.join(format!("f{i:03}.ppm")), pnm::encode_p6(frame)).unwrap();
    }
}

/// Builds a test-split dataset under `root`: one rendered clip and
/// `captions_per` captions per video. Returns the manifest path.
pub fn write_dataset(root: &Path, n_videos: usize, captions_per: usize) -> PathBuf {
    write_dataset_with(root, n_videos, captions_per, small_clip)
}

/// Like [`write_dataset`] with a custom per-video clip configuration.
pub fn write_dataset_with(
    root: &Path,
    n_videos: usize,
    captions_per: usize,
    clip: impl Fn(u64) -> MovingSquareConfig,
) -> PathBuf {
    let mut entries = Vec::new();
    for v in 0..n_videos {
        let id = format!("v{v:02}");
        write_clip(&root.join("frames").join(&id), &clip(v as u64 + 1));
        let captions: Vec<String> = (0..captions_per)
            .map(|c| format!("clip {v} caption {c}"))
            .collect();
        entries.push(serde_json::json!({
            "video_id": id,
            "frame_dir": format!("frames/{id}"),
            "captions": captions,
            "split": "test",
        }));
    }
    let path = root.join("manifest.json");
    let manifest = serde_json::json!({ "entries": entries });
    std::fs::write(&path, serde_json::to_vec_pretty(&manifest).unwrap()).unwrap();
    path
}

/// Writes a run config named `name` under `root`. `backend` is the
/// backend JSON object; `extra` appends top-level fields and must
/// start with a comma when nonempty.
pub fn write_config(root: &Path, name: &str, backend: &str, extra: &str) -> PathBuf {
    let body = format!(
        r#"{{"manifest_path": "manifest.json", "output_dir": "out", "backend": {backend}{extra}}}"#
    );
    let path = root.join(name);
    std::fs::write(&path, body).unwrap();
    path
}
