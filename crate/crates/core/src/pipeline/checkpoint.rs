use crate::reaction::Vocabulary;
use crate::tensor::ParameterStore;

use super::{GraphRetro, PipelineError, TrainConfig};

const MAGIC: &[u8; 4] = b"GRCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Container: magic, version, then length-prefixed config text, vocabulary
/// text and parameter bytes.
pub fn save_checkpoint(model: &GraphRetro) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend(MAGIC);
    out.extend(CHECKPOINT_VERSION.to_le_bytes());
    for part in [
        model.config.to_string().into_bytes(),
        model.vocab.to_text().into_bytes(),
        model.store.to_bytes(),
    ] {
        out.extend((part.len() as u64).to_le_bytes());
        out.extend(part);
    }
    out
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<GraphRetro, PipelineError> {
    let bad = |m: &str| PipelineError::Checkpoint(m.to_string());
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(PipelineError::Checkpoint(format!(
            "version {version} is not supported (expected {CHECKPOINT_VERSION})"
        )));
    }
    let mut pos = 8;
    let mut parts = Vec::with_capacity(3);
    for _ in 0..3 {
        let len_bytes = bytes.get(pos..pos + 8).ok_or_else(|| bad("truncated"))?;
        let len = u64::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
        pos += 8;
        let end = pos.checked_add(len).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated"))?;
        parts.push(&bytes[pos..end]);
        pos = end;
    }
    if pos != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    let text = |b: &[u8]| String::from_utf8(b.to_vec()).map_err(|_| bad("text section is not UTF-8"));
    let config = TrainConfig::from_text(&text(parts[0])?)?;
    let vocab = Vocabulary::from_text(&text(parts[1])?)?;
    let store = ParameterStore::from_bytes(parts[2])?;
    let mut model = GraphRetro::new(config, vocab)?;
    if store.len() != model.store.len() || store.precision() != model.store.precision() {
        return Err(bad("parameters do not match the stored config"));
    }
    for (a, b) in model.store.ids().zip(store.ids()) {
        if model.store.name(a) != store.name(b) || model.store.value(a).shape() != store.value(b).shape() {
            return Err(PipelineError::Checkpoint(format!(
                "parameter '{}' does not match the stored config",
                store.name(b)
            )));
        }
    }
    model.store = store;
    Ok(model)
}
