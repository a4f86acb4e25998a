//! Parameter checkpoints.
//!
//! Layout: the 8 magic bytes `MWICKPT\0`, a little-endian `u32` format
//! version, a `u32` header length, a JSON header (model config, class names,
//! optional metadata, and a manifest of tensor names and shapes), then every
//! tensor's values as little-endian `f32` in manifest order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ModelConfig, Network};
use super::tensor::Tensor;
use super::CnnError;

pub const MAGIC: &[u8; 8] = b"MWICKPT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    classes: Vec<String>,
    #[serde(default)]
    metadata: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

/// A trained network with its class names and free-form metadata.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub network: Network<f32>,
    pub classes: Vec<String>,
    pub metadata: serde_json::Value,
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<(), CnnError> {
    let path = path.as_ref();
    let params = ckpt.network.parameters();
    let header = Header {
        model: ckpt.network.config().clone(),
        classes: ckpt.classes.clone(),
        metadata: ckpt.metadata.clone(),
        tensors: params
            .iter()
            .map(|(name, t)| TensorEntry {
                name: name.clone(),
                shape: t.shape().to_vec(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| CnnError::Checkpoint {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let values: usize = params.iter().map(|(_, t)| t.len()).sum();
    let mut bytes = Vec::with_capacity(16 + json.len() + 4 * values);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(json.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&json);
    for (_, t) in &params {
        for v in t.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|source| CnnError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, CnnError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| CnnError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |reason: String| CnnError::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("not a checkpoint file".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    let version = word(8);
    if version != VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let header_len = word(12) as usize;
    let body = bytes
        .get(16..16 + header_len)
        .ok_or_else(|| bad("header extends past end of file".into()))?;
    let header: Header = serde_json::from_slice(body).map_err(|e| bad(format!("header: {e}")))?;
    let mut network = Network::<f32>::new(&header.model, 0)?;
    let expected = network.parameters();
    if expected.len() != header.tensors.len()
        || expected
            .iter()
            .zip(&header.tensors)
            .any(|((name, t), e)| *name != e.name || t.shape() != e.shape.as_slice())
    {
        return Err(bad("tensor manifest does not match the model config".into()));
    }
    let mut offset = 16 + header_len;
    let mut values = Vec::with_capacity(header.tensors.len());
    for entry in &header.tensors {
        let n: usize = entry.shape.iter().product();
        let raw = bytes
            .get(offset..offset + 4 * n)
            .ok_or_else(|| bad(format!("{} is truncated", entry.name)))?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        values.push(Tensor::from_vec(&entry.shape, data)?);
        offset += 4 * n;
    }
    if offset != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - offset)));
    }
    network.set_parameters(values)?;
    Ok(Checkpoint {
        network,
        classes: header.classes,
        metadata: header.metadata,
    })
}
