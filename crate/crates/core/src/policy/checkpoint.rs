use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PolicyConfig, PolicyParams};
use crate::error::{Error, Result};
use crate::retrieval::io::write_atomic;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Structured-text parameter checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub config: PolicyConfig,
    pub weights: Vec<f64>,
}

impl Checkpoint {
    pub fn of(params: &PolicyParams) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config_hash: params.config.hash(),
            config: params.config,
            weights: params.weights.clone(),
        }
    }

    /// Restores parameters, refusing checkpoints written for another config.
    pub fn into_params(self, expected: &PolicyConfig) -> Result<PolicyParams> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion(self.version));
        }
        let want = expected.hash();
        if self.config_hash != want || self.config.hash() != want {
            return Err(Error::ConfigMismatch { expected: want, found: self.config_hash });
        }
        PolicyParams::from_weights(self.config, self.weights)
    }
}

/// Writes via temp file + rename so an interrupted save never leaves a
/// truncated checkpoint behind.
pub fn save_checkpoint(path: &Path, params: &PolicyParams) -> Result<()> {
    let mut json = serde_json::to_vec(&Checkpoint::of(params))?;
    json.push(b'\n');
    write_atomic(path, &json)
}

pub fn load_checkpoint(path: &Path, expected: &PolicyConfig) -> Result<PolicyParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| Error::Parse { path: path.to_path_buf(), line: e.line(), msg: e.to_string() })?;
    ck.into_params(expected)
}
