//! Dataset manifests: which videos exist, where their frames live,
//! and which captions describe them.
//!
//! A manifest is a JSON object `{"entries": [...]}` where each entry
//! carries `video_id`, `frame_dir`, a nonempty `captions` list, and a
//! `split` of `"train"` or `"test"`. Relative frame directories are
//! resolved against the manifest file's own directory, so fixture
//! trees stay relocatable.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("manifest is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate video id '{video_id}'")]
    DuplicateVideoId { video_id: String },
    #[error("video '{video_id}' has no captions")]
    NoCaptions { video_id: String },
}

/// Which evaluation phase a video belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One video: its id, frame directory, and caption list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub video_id: String,
    pub frame_dir: PathBuf,
    pub captions: Vec<String>,
    pub split: Split,
}

/// All videos of one dataset, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Parses and validates manifest JSON.
    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        let manifest: DatasetManifest = serde_json::from_str(text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Reads a manifest file and resolves relative frame directories
    /// against the file's parent directory.
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut manifest = Self::from_json(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for entry in &mut manifest.entries {
            if entry.frame_dir.is_relative() {
                entry.frame_dir = base.join(&entry.frame_dir);
            }
        }
        Ok(manifest)
    }

    fn validate(&self) -> Result<(), ManifestError> {
        let mut seen = std::collections::BTreeSet::new();
        for entry in &self.entries {
            if !seen.insert(&entry.video_id) {
                return Err(ManifestError::DuplicateVideoId {
                    video_id: entry.video_id.clone(),
                });
            }
            if entry.captions.is_empty() {
                return Err(ManifestError::NoCaptions {
                    video_id: entry.video_id.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn entry(&self, video_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.video_id == video_id)
    }

    /// Entries of one split, in manifest order.
    pub fn split_entries(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}
