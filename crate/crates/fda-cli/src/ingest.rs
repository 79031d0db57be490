//! Frame ingestion: turning a directory of image files into an
//! in-memory frame sequence.
//!
//! Frames are matched by a glob pattern against file names only and
//! ordered by lexicographic file-name comparison, so zero-padded
//! names like `f000.ppm` load in temporal order regardless of how the
//! directory iterates.

use std::io;
use std::path::{Path, PathBuf};

use fda_core::{FrameSequence, RasterError, RgbFrame};

use crate::pnm::{self, PnmError};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("frame directory {path} does not exist")]
    MissingDirectory { path: String },
    #[error("{path} is not a directory")]
    NotADirectory { path: String },
    #[error("invalid frame pattern '{pattern}': {source}")]
    BadPattern {
        pattern: String,
        #[source]
        source: glob::PatternError,
    },
    #[error("no files in {path} match '{pattern}'")]
    NoFramesMatched { path: String, pattern: String },
    #[error("cannot decode frame {path}: {source}")]
    Decode {
        path: String,
        #[source]
        source: PnmError,
    },
    #[error("cannot read frame directory {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Loads every frame in `dir` whose file name matches `pattern`, in
/// lexicographic file-name order.
pub fn load_frame_sequence(
    dir: &Path,
    pattern: &str,
    source_id: &str,
) -> Result<FrameSequence, IngestError> {
    let matcher = glob::Pattern::new(pattern).map_err(|source| IngestError::BadPattern {
        pattern: pattern.to_owned(),
        source,
    })?;
    let meta = std::fs::metadata(dir).map_err(|_| IngestError::MissingDirectory {
        path: dir.display().to_string(),
    })?;
    if !meta.is_dir() {
        return Err(IngestError::NotADirectory {
            path: dir.display().to_string(),
        });
    }

    let mut paths: Vec<PathBuf> = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|source| IngestError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| IngestError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let name = entry.file_name();
        if let Some(name) = name.to_str() {
            if matcher.matches(name) {
                paths.push(entry.path());
            }
        }
    }
    if paths.is_empty() {
        return Err(IngestError::NoFramesMatched {
            path: dir.display().to_string(),
            pattern: pattern.to_owned(),
        });
    }
    paths.sort();

    let mut frames: Vec<RgbFrame> = Vec::with_capacity(paths.len());
    for path in &paths {
        let frame = pnm::read_frame(path).map_err(|source| IngestError::Decode {
            path: path.display().to_string(),
            source,
        })?;
        frames.push(frame);
    }
    Ok(FrameSequence::new(source_id.to_owned(), frames)?)
}
