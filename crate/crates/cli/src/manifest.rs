//! Output directories, content digests and run manifests.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::UsageError;

pub const LOCK_NAME: &str = ".s2spm.lock";
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub software_version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started: String,
    pub finished: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

/// An output directory held under an exclusive lock file for the lifetime of
/// the value. Every written file is recorded with its digest.
pub struct OutDir {
    root: PathBuf,
    lock: PathBuf,
    outputs: Vec<FileDigest>,
    inputs: Vec<FileDigest>,
    started: String,
}

impl OutDir {
    pub fn open(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let lock = root.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(UsageError(format!(
                    "{} is locked by another command (remove {} if no command is running)",
                    root.display(),
                    lock.display()
                ))
                .into());
            }
            Err(e) => return Err(e).with_context(|| format!("creating {}", lock.display())),
        }
        Ok(OutDir {
            root: root.to_path_buf(),
            lock,
            outputs: Vec::new(),
            inputs: Vec::new(),
            started: chrono::Utc::now().to_rfc3339(),
        })
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let d = digest_file(path)?;
        if !self.inputs.contains(&d) {
            self.inputs.push(d);
        }
        Ok(())
    }

    /// Writes `rel` under the output root, creating parent directories.
    pub fn write(&mut self, rel: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.retain(|d| d.path != rel);
        self.outputs.push(FileDigest {
            path: rel.to_string(),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    pub fn finish(mut self, command: &str, seed: Option<u64>, config: serde_json::Value) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            started: self.started.clone(),
            finished: chrono::Utc::now().to_rfc3339(),
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        let path = self.root.join(MANIFEST_NAME);
        let mut f = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")?;
        self.outputs.clear();
        Ok(manifest)
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
