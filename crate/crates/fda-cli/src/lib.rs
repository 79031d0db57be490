//! File formats, process plumbing, and orchestration around
//! `fda-core`.
//!
//! The core crate is pure computation; everything that touches the
//! outside world lives here: PNM image IO, dataset manifests, run
//! configuration, the embedding store format, the external-encoder
//! protocol, and the evaluation runner behind the `fda` binary.
//!
//! Module map:
//! * [`pnm`]: binary P6/P5 image encoding and decoding.
//! * [`manifest`]: dataset descriptions (videos, frames, captions).
//! * [`config`]: the JSON run configuration.
//! * [`ingest`]: loading frame directories into sequences.
//! * [`store`]: the `FDAE` embedding store format and its backend.
//! * [`external`]: the child-process encoder backend.
//! * [`runner`]: end-to-end evaluation, sweeps, and mask export.

#![forbid(unsafe_code)]

pub mod config;
pub mod external;
pub mod ingest;
pub mod manifest;
pub mod pnm;
pub mod runner;
pub mod store;

use std::io::Write as _;
use std::path::Path;

/// Writes a file atomically: the bytes land in a temporary sibling
/// that is renamed over the target, so readers never see a partial
/// file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
