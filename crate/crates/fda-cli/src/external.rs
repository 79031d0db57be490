//! Encoder backend that delegates to a child process.
//!
//! The protocol is line-delimited JSON over the child's stdin/stdout.
//! Each request is one object: `{"type": "frame", "rgb_path": ...,
//! "mask_path": ...}` or `{"type": "text", "text": ...}`. The child
//! answers every request with one line holding a JSON array of floats.
//! Frames are handed over as files (a P6 image plus its P5 mask) so
//! the child can use any image library; the paths live in a private
//! temporary directory that is reused between requests.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use fda_core::{BinaryMask, EncodeError, EncoderBackend, RgbFrame, SourceId};
use serde::Serialize;

use crate::pnm;

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Request<'a> {
    Frame { rgb_path: &'a str, mask_path: &'a str },
    Text { text: &'a str },
}

/// A running encoder child process.
#[derive(Debug)]
pub struct ExternalBackend {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    dim: usize,
    workdir: tempfile::TempDir,
}

fn backend_error(message: String) -> EncodeError {
    EncodeError::Backend { message }
}

impl ExternalBackend {
    /// Starts `command args...` and prepares the request channel. The
    /// child inherits stderr so its diagnostics stay visible.
    pub fn spawn(command: &str, args: &[String], dim: usize) -> Result<Self, EncodeError> {
        if dim < fda_core::MIN_DIM {
            return Err(EncodeError::DimensionTooSmall { got: dim });
        }
        let workdir = tempfile::tempdir()
            .map_err(|e| backend_error(format!("cannot create scratch directory: {e}")))?;
        let mut child = Command::new(command)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| backend_error(format!("cannot start encoder '{command}': {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child
            .stdout
            .take()
            .map(BufReader::new)
            .ok_or_else(|| backend_error("encoder child has no stdout".to_owned()))?;
        Ok(Self {
            child,
            stdin,
            stdout,
            dim,
            workdir,
        })
    }

    fn round_trip(&mut self, request: &Request<'_>) -> Result<Vec<f32>, EncodeError> {
        let mut line = serde_json::to_string(request)
            .map_err(|e| backend_error(format!("cannot serialize request: {e}")))?;
        line.push('\n');
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| backend_error("encoder stdin already closed".to_owned()))?;
        stdin
            .write_all(line.as_bytes())
            .and_then(|()| stdin.flush())
            .map_err(|e| backend_error(format!("cannot write to encoder: {e}")))?;

        let mut response = String::new();
        let n = self
            .stdout
            .read_line(&mut response)
            .map_err(|e| backend_error(format!("cannot read from encoder: {e}")))?;
        if n == 0 {
            return Err(backend_error(
                "encoder closed its stdout before answering".to_owned(),
            ));
        }
        let values: Vec<f32> = serde_json::from_str(response.trim())
            .map_err(|e| backend_error(format!("encoder reply is not a float array: {e}")))?;
        if values.len() != self.dim {
            return Err(EncodeError::DimensionMismatch {
                expected: self.dim,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(backend_error(
                "encoder reply contains a non-finite value".to_owned(),
            ));
        }
        Ok(values)
    }

    fn write_scratch(&self, name: &str, bytes: &[u8]) -> Result<String, EncodeError> {
        let path = self.workdir.path().join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| backend_error(format!("cannot write {}: {e}", path.display())))?;
        path.to_str()
            .map(str::to_owned)
            .ok_or_else(|| backend_error("scratch path is not valid UTF-8".to_owned()))
    }
}

impl EncoderBackend for ExternalBackend {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_frame(
        &mut self,
        frame: &RgbFrame,
        mask: &BinaryMask,
        _source: SourceId<'_>,
    ) -> Result<Vec<f32>, EncodeError> {
        let rgb_path = self.write_scratch("frame.ppm", &pnm::encode_p6(frame))?;
        let mask_path = self.write_scratch("mask.pgm", &pnm::encode_mask(mask))?;
        self.round_trip(&Request::Frame {
            rgb_path: &rgb_path,
            mask_path: &mask_path,
        })
    }

    fn encode_text(&mut self, text: &str, _source: SourceId<'_>) -> Result<Vec<f32>, EncodeError> {
        self.round_trip(&Request::Text { text })
    }
}

impl Drop for ExternalBackend {
    fn drop(&mut self) {
        // Closing stdin asks a well-behaved child to exit; the kill
        // cleans up after one that keeps reading.
        self.stdin.take();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A dependency-free encoder: fixed vectors keyed on request type.
    const SCRIPT: &str = r#"
while read -r line; do
  case "$line" in
    *'"text"'*) echo '[0.0, 1.0]';;
    *) echo '[1.0, 0.0]';;
  esac
done
"#;

    fn script_backend(dim: usize) -> (tempfile::TempDir, ExternalBackend) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("encoder.sh");
        std::fs::write(&path, SCRIPT).unwrap();
        let args = vec![path.to_str().unwrap().to_owned()];
        let backend = ExternalBackend::spawn("sh", &args, dim).unwrap();
        (dir, backend)
    }

    fn source() -> SourceId<'static> {
        SourceId {
            video_id: "v",
            index: 0,
        }
    }

    #[test]
    fn shell_encoder_answers_both_request_kinds() {
        let (_dir, mut backend) = script_backend(2);
        assert_eq!(backend.dim(), 2);
        let frame = RgbFrame::filled(2, 2, [9, 9, 9]).unwrap();
        let mask = BinaryMask::filled(2, 2, true).unwrap();
        assert_eq!(
            backend.encode_frame(&frame, &mask, source()).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            backend.encode_text("a caption", source()).unwrap(),
            vec![0.0, 1.0]
        );
        // The channel stays usable across many requests.
        for _ in 0..10 {
            assert_eq!(
                backend.encode_text("again", source()).unwrap(),
                vec![0.0, 1.0]
            );
        }
    }

    #[test]
    fn wrong_reply_dimension_is_rejected() {
        let (_dir, mut backend) = script_backend(3);
        let err = backend.encode_text("x", source()).unwrap_err();
        assert!(matches!(
            err,
            EncodeError::DimensionMismatch {
                expected: 3,
                got: 2
            }
        ));
    }

    #[test]
    fn missing_command_fails_at_spawn() {
        let err = ExternalBackend::spawn("definitely-not-a-command-xyz", &[], 2).unwrap_err();
        assert!(matches!(err, EncodeError::Backend { .. }));
    }

    #[test]
    fn exiting_child_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("quit.sh");
        std::fs::write(&path, "exit 0\n").unwrap();
        let args = vec![path.to_str().unwrap().to_owned()];
        let mut backend = ExternalBackend::spawn("sh", &args, 2).unwrap();
        let err = backend.encode_text("x", source()).unwrap_err();
        assert!(matches!(err, EncodeError::Backend { .. }));
    }

    #[test]
    fn garbage_reply_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("garbage.sh");
        std::fs::write(&path, "while read -r line; do echo 'not json'; done\n").unwrap();
        let args = vec![path.to_str().unwrap().to_owned()];
        let mut backend = ExternalBackend::spawn("sh", &args, 2).unwrap();
        let err = backend.encode_text("x", source()).unwrap_err();
        assert!(matches!(err, EncodeError::Backend { .. }));
    }

    #[test]
    fn tiny_dimension_is_rejected() {
        assert!(matches!(
            ExternalBackend::spawn("sh", &[], 1),
            Err(EncodeError::DimensionTooSmall { got: 1 })
        ));
    }
}
