//! Model files: pretty-printed JSON with a top-level `version` field.
//!
//! Floats are written in shortest round-trip form and parsed back exactly, so
//! a reloaded model predicts bit-identically.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::engine::{EnsembleModel, MODEL_FORMAT_VERSION};
use crate::error::{PscnnError, Result};

/// Writes `bytes` to a temporary sibling of `path` and renames it into place,
/// so a failed write never leaves a partial file behind.
pub(crate) fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| PscnnError::io(dir, e))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| PscnnError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| PscnnError::io(path, e.error))?;
    Ok(())
}

pub fn model_to_string(model: &EnsembleModel) -> Result<String> {
    serde_json::to_string_pretty(model)
        .map_err(|e| PscnnError::CorruptModel(format!("cannot serialize model: {e}")))
}

pub fn model_from_str(text: &str) -> Result<EnsembleModel> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| PscnnError::CorruptModel(e.to_string()))?;
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| PscnnError::CorruptModel("missing or non-integer `version`".into()))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(PscnnError::VersionMismatch {
            found: version,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let model: EnsembleModel =
        serde_json::from_value(value).map_err(|e| PscnnError::CorruptModel(e.to_string()))?;
    model.validate()?;
    Ok(model)
}

pub fn save_model(model: &EnsembleModel, path: impl AsRef<Path>) -> Result<()> {
    let mut text = model_to_string(model)?;
    text.push('\n');
    write_atomically(path.as_ref(), text.as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EnsembleModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| PscnnError::io(path, e))?;
    model_from_str(&text)
}
