//! Run configuration: one JSON file describing a whole evaluation run.
//!
//! A config names the dataset manifest, the mask parameters, how many
//! frames to sample per video, which encoder backend to use, the run
//! seed, and the output directory. Relative paths are resolved against
//! the config file's own directory.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use fda_core::MaskConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid mask parameters: {0}")]
    Mask(#[from] fda_core::MaskError),
    #[error("{field} must be at least 1")]
    ZeroFrameCount { field: &'static str },
    #[error("external backend command must not be empty")]
    EmptyCommand,
}

/// Which encoder produces frame and text embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendConfig {
    /// Deterministic hash-based embeddings with no semantic signal.
    Mock {
        #[serde(default = "default_dim")]
        dim: usize,
    },
    /// Basis-anchor embeddings that make retrieval solvable by design.
    Planted {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default)]
        noise: f64,
    },
    /// Precomputed embeddings read from a store file.
    Store { path: PathBuf },
    /// Child process speaking the line-delimited JSON protocol.
    External {
        command: String,
        #[serde(default)]
        args: Vec<String>,
        #[serde(default = "default_dim")]
        dim: usize,
    },
}

fn default_dim() -> usize {
    512
}

fn default_n_frames_train() -> usize {
    6
}

fn default_n_frames_test() -> usize {
    12
}

fn default_frame_pattern() -> String {
    "*.ppm".to_owned()
}

/// Everything one evaluation run needs, loaded from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifest_path: PathBuf,
    #[serde(default)]
    pub mask: MaskConfig,
    #[serde(default = "default_n_frames_train")]
    pub n_frames_train: usize,
    #[serde(default = "default_n_frames_test")]
    pub n_frames_test: usize,
    #[serde(default = "default_frame_pattern")]
    pub frame_pattern: String,
    pub backend: BackendConfig,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Parses and validates config JSON without touching the filesystem.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file and resolves relative paths against its
    /// parent directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.manifest_path = resolve(base, &config.manifest_path);
        config.output_dir = resolve(base, &config.output_dir);
        if let BackendConfig::Store { path } = &mut config.backend {
            *path = resolve(base, path);
        }
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.mask.validate()?;
        if self.n_frames_train == 0 {
            return Err(ConfigError::ZeroFrameCount {
                field: "n_frames_train",
            });
        }
        if self.n_frames_test == 0 {
            return Err(ConfigError::ZeroFrameCount {
                field: "n_frames_test",
            });
        }
        if let BackendConfig::External { command, .. } = &self.backend {
            if command.is_empty() {
                return Err(ConfigError::EmptyCommand);
            }
        }
        Ok(())
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}
