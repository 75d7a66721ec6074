use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::params::ParamStore;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// JSON checkpoint: parameter tensors plus the architecture they belong to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model: String,
    /// SHA-256 of the serialized architecture spec.
    pub spec_hash: String,
    pub spec: serde_json::Value,
    pub params: Vec<ParamRecord>,
}

pub fn spec_hash<S: Serialize>(spec: &S) -> Result<String> {
    let bytes = serde_json::to_vec(spec)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl Checkpoint {
    pub fn capture<S: Serialize>(model: &str, spec: &S, store: &ParamStore) -> Result<Self> {
        let params = store
            .ids()
            .map(|id| {
                let t = store.tensor(id);
                ParamRecord {
                    name: store.name(id).to_string(),
                    shape: t.shape().to_vec(),
                    values: t.data().to_vec(),
                }
            })
            .collect();
        Ok(Checkpoint {
            format_version: CHECKPOINT_VERSION,
            model: model.to_string(),
            spec_hash: spec_hash(spec)?,
            spec: serde_json::to_value(spec)?,
            params,
        })
    }

    /// Checks model kind, version and hash, and decodes the spec.
    pub fn spec<S: for<'de> Deserialize<'de> + Serialize>(&self, model: &str) -> Result<S> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {}",
                self.format_version
            )));
        }
        if self.model != model {
            return Err(Error::Checkpoint(format!(
                "expected a {model} checkpoint, found {}",
                self.model
            )));
        }
        let spec: S = serde_json::from_value(self.spec.clone())?;
        if spec_hash(&spec)? != self.spec_hash {
            return Err(Error::Checkpoint("spec hash does not match spec".into()));
        }
        Ok(spec)
    }

    /// Copies stored values into a store built from the same spec.
    pub fn restore(&self, store: &mut ParamStore) -> Result<()> {
        if self.params.len() != store.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} tensors, model has {}",
                self.params.len(),
                store.len()
            )));
        }
        let ids: Vec<_> = store.ids().collect();
        for (id, rec) in ids.into_iter().zip(&self.params) {
            if store.name(id) != rec.name || store.tensor(id).shape() != rec.shape.as_slice() {
                return Err(Error::Checkpoint(format!(
                    "tensor `{}` {:?} does not match model tensor `{}` {:?}",
                    rec.name,
                    rec.shape,
                    store.name(id),
                    store.tensor(id).shape()
                )));
            }
            store.set_values(id, &rec.values)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec(self)?;
        bytes.push(b'\n');
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}
