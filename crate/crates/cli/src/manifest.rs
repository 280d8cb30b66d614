use std::path::{Path, PathBuf};

use jargon_gateway::ProviderConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Everything needed to re-run a command against the same response cache.
/// Provider entries carry the *name* of the key variable, never the key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub corpus_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold_seed: Option<u64>,
    pub sampling_seed: u64,
    pub providers: Vec<ProviderConfig>,
    pub cache_file: PathBuf,
    pub timestamp: String,
    pub artifact_version: String,
}

impl RunManifest {
    /// True when two manifests describe the same run, ignoring when it ran.
    pub fn same_run(&self, other: &RunManifest) -> bool {
        let mut a = self.clone();
        a.timestamp.clone_from(&other.timestamp);
        &a == other
    }
}

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

pub fn digest_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(digest(&bytes))
}
