use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::{Error, Result};

const FORMAT: &str = "s2spm-snapshot";
const VERSION: u32 = 1;

/// Versioned parameter container. Floats are written in shortest
/// round-trip form and parsed exactly, so save/load is lossless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub iteration: usize,
    pub n_nodes: usize,
    pub k_pos: usize,
    pub k_neg: usize,
    pub params: ModelParams,
}

impl Snapshot {
    pub fn new(params: ModelParams, seed: u64, iteration: usize) -> Self {
        Snapshot {
            format: FORMAT.to_string(),
            version: VERSION,
            seed,
            iteration,
            n_nodes: params.n_nodes(),
            k_pos: params.k_pos(),
            k_neg: params.k_neg(),
            params,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(text)?;
        if snap.format != FORMAT || snap.version != VERSION {
            return Err(Error::domain(format!(
                "unsupported snapshot {} v{}",
                snap.format, snap.version
            )));
        }
        snap.params.validate()?;
        if snap.n_nodes != snap.params.n_nodes()
            || snap.k_pos != snap.params.k_pos()
            || snap.k_neg != snap.params.k_neg()
        {
            return Err(Error::domain("snapshot header does not match tensor shapes"));
        }
        Ok(snap)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
