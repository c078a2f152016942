//! Checkpoints: a JSON manifest naming every parameter and its shape, plus a
//! raw little-endian `f32` blob holding the values in manifest order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::Model;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

const FORMAT: &str = "vsnit-checkpoint/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub config: ModelConfig,
    pub blob: String,
    pub params: Vec<ParamEntry>,
}

/// Path of the blob that accompanies manifest `path`.
pub fn blob_path(path: &Path) -> PathBuf {
    path.with_extension("bin")
}

pub fn encode_f32<'a>(tensors: impl IntoIterator<Item = &'a Tensor>) -> Vec<u8> {
    let mut out = Vec::new();
    for t in tensors {
        for &v in t.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Splits `bytes` into tensors of the given shapes.
pub fn decode_f32(bytes: &[u8], shapes: &[Vec<usize>]) -> Result<Vec<Tensor>> {
    let want: usize = shapes.iter().map(|s| s.iter().product::<usize>()).sum();
    if bytes.len() != want * 4 {
        return Err(Error::Contract(format!(
            "blob holds {} bytes, manifest needs {}",
            bytes.len(),
            want * 4
        )));
    }
    let mut values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64);
    shapes
        .iter()
        .map(|s| {
            let n = s.iter().product();
            Tensor::new(s.clone(), values.by_ref().take(n).collect())
        })
        .collect()
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    let blob = blob_path(path);
    let manifest = Manifest {
        format: FORMAT.into(),
        config: model.config.clone(),
        blob: file_name(&blob),
        params: model
            .store
            .iter()
            .map(|(_, p)| ParamEntry {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
            })
            .collect(),
    };
    fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    fs::write(blob, encode_f32(model.store.iter().map(|(_, p)| &p.value)))?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(path)?)?;
    if manifest.format != FORMAT {
        return Err(Error::Compatibility {
            fields: vec![format!("format ({})", manifest.format)],
        });
    }
    Ok(manifest)
}

/// Loads a checkpoint, rebuilding the model from its embedded config.
pub fn load(path: &Path) -> Result<Model> {
    let manifest = read_manifest(path)?;
    let config = manifest.config.clone();
    restore(path, manifest, config)
}

/// Loads a checkpoint into a model built from `expected`; any field that
/// differs from the embedded config is a compatibility error naming it.
pub fn load_expecting(path: &Path, expected: &ModelConfig) -> Result<Model> {
    let manifest = read_manifest(path)?;
    let fields = expected.diff(&manifest.config);
    if !fields.is_empty() {
        return Err(Error::Compatibility { fields });
    }
    restore(path, manifest, expected.clone())
}

fn restore(path: &Path, manifest: Manifest, config: ModelConfig) -> Result<Model> {
    let mut model = Model::new(config)?;
    let names: Vec<&str> = manifest.params.iter().map(|p| p.name.as_str()).collect();
    let expected: Vec<&str> = model.store.iter().map(|(_, p)| p.name.as_str()).collect();
    if names != expected {
        return Err(Error::Compatibility {
            fields: vec!["params".into()],
        });
    }
    let blob = path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&manifest.blob);
    let shapes: Vec<Vec<usize>> = manifest.params.iter().map(|p| p.shape.clone()).collect();
    let tensors = decode_f32(&fs::read(blob)?, &shapes)?;
    for (p, t) in model.store.iter_mut().zip(tensors) {
        if p.value.shape() != t.shape() {
            return Err(Error::Compatibility {
                fields: vec![format!("shape of {}", p.name)],
            });
        }
        p.value = t;
    }
    Ok(model)
}

/// FNV-1a over the `f32` little-endian encoding of every parameter, in
/// store order. Stable across save/load.
pub fn checksum(model: &Model) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in encode_f32(model.store.iter().map(|(_, p)| &p.value)) {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}
