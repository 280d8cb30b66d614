use serde::{Deserialize, Serialize};

use crate::GatewayError;

fn default_max_tokens() -> u32 {
    1024
}

fn default_rpm() -> u32 {
    60
}

fn default_attempts() -> u32 {
    5
}

fn default_timeout() -> u64 {
    120
}

fn default_backoff_ms() -> u64 {
    1000
}

/// One chat-completion endpoint. Holds the *name* of the environment
/// variable with the API key, never the key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub name: String,
    /// Base URL up to and including the API version, e.g.
    /// `https://api.openai.com/v1`; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    pub api_key_env: String,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_rpm")]
    pub requests_per_minute: u32,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_backoff_ms")]
    pub initial_backoff_ms: u64,
}

impl ProviderConfig {
    pub fn new(name: &str, base_url: &str, model: &str, api_key_env: &str) -> Self {
        Self {
            name: name.into(),
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: api_key_env.into(),
            max_tokens: default_max_tokens(),
            temperature: 0.0,
            requests_per_minute: default_rpm(),
            max_attempts: default_attempts(),
            timeout_secs: default_timeout(),
            initial_backoff_ms: default_backoff_ms(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |m: &str| Err(GatewayError::InvalidConfig(format!("provider `{}`: {m}", self.name)));
        if self.name.is_empty() || self.model.is_empty() || self.base_url.is_empty() {
            return bad("name, model and base_url are required");
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return bad("temperature must be >= 0");
        }
        if self.requests_per_minute < 1 {
            return bad("requests_per_minute must be >= 1");
        }
        if self.max_attempts < 1 {
            return bad("max_attempts must be >= 1");
        }
        Ok(())
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let mut c = ProviderConfig::new("openai", "http://x/v1/", "gpt-4-turbo", "OPENAI_API_KEY");
        assert!(c.validate().is_ok());
        assert_eq!(c.endpoint(), "http://x/v1/chat/completions");
        c.temperature = -0.1;
        assert!(c.validate().is_err());
        c.temperature = 0.0;
        c.requests_per_minute = 0;
        assert!(c.validate().is_err());
    }
}
