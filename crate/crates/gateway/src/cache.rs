//! Append-only response cache keyed by a digest of the request.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ProviderConfig;
use crate::GatewayError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub cache_key: String,
    pub provider: String,
    pub model: String,
    pub prompt: String,
    pub response: String,
    pub timestamp: String,
    pub attempts: u32,
}

/// SHA-256 over (provider, model, prompt, temperature, max_tokens).
pub fn cache_key(cfg: &ProviderConfig, prompt: &str) -> String {
    let material = serde_json::json!([
        cfg.name,
        cfg.model,
        prompt,
        format!("{:?}", cfg.temperature),
        cfg.max_tokens
    ]);
    hex::encode(Sha256::digest(material.to_string().as_bytes()))
}

pub struct ResponseCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, ChatExchange>>,
    writer: Mutex<Option<File>>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            entries: RwLock::new(HashMap::new()),
            writer: Mutex::new(None),
        }
    }

    /// Opens (creating if needed) a line-delimited cache file. The first
    /// record for a key wins; an unparseable trailing line from an
    /// interrupted write is ignored.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref().to_path_buf();
        let io = |e| GatewayError::Cache(format!("{}: {e}", path.display()));
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io)?);
            for line in reader.lines() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<ChatExchange>(&line) {
                    Ok(ex) => {
                        entries.entry(ex.cache_key.clone()).or_insert(ex);
                    }
                    Err(e) => tracing::warn!("skipping unreadable cache line: {e}"),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        Ok(Self {
            path: Some(path),
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(file)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<ChatExchange> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records an exchange. Writes are serialized through one writer.
    pub fn insert(&self, exchange: ChatExchange) -> Result<(), GatewayError> {
        let mut writer = self.writer.lock().expect("cache writer lock");
        if let Some(file) = writer.as_mut() {
            let mut line = serde_json::to_string(&exchange).expect("exchange serializes");
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|e| GatewayError::Cache(e.to_string()))?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .entry(exchange.cache_key.clone())
            .or_insert(exchange);
        Ok(())
    }
}
