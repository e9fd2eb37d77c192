//! Backend profiles: where to send prompts and how to talk to the endpoint.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::LlmError;

pub const DEFAULT_TEMPERATURE: f64 = 0.1;

pub const DEFAULT_SYSTEM_PROMPT: &str =
    "You are the dispatcher of a cooperative kitchen. Reply with one command per agent.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireFormat {
    /// `POST {base_url}/chat/completions`, bearer auth.
    OpenAi,
    /// `POST {base_url}/messages`, `x-api-key` auth.
    Anthropic,
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

fn default_max_tokens() -> u32 {
    512
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    3
}

fn default_backoff() -> f64 {
    0.5
}

fn default_max_backoff() -> f64 {
    30.0
}

fn default_system() -> String {
    DEFAULT_SYSTEM_PROMPT.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmProfile {
    pub format: WireFormat,
    /// Base URL including the version prefix, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the key; `None` sends no key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout")]
    pub request_timeout_secs: f64,
    /// Retries after the first attempt for rate limits, 5xx and timeouts.
    #[serde(default = "default_retries")]
    pub transport_retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_base_secs: f64,
    #[serde(default = "default_max_backoff")]
    pub backoff_max_secs: f64,
    /// Shared request budget; `None` leaves requests unthrottled.
    #[serde(default)]
    pub requests_per_minute: Option<u32>,
    #[serde(default = "default_system")]
    pub system_prompt: String,
}

impl LlmProfile {
    pub fn new(format: WireFormat, base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            format,
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: None,
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: default_max_tokens(),
            request_timeout_secs: default_timeout(),
            transport_retries: default_retries(),
            backoff_base_secs: default_backoff(),
            backoff_max_secs: default_max_backoff(),
            requests_per_minute: None,
            system_prompt: default_system(),
        }
    }

    pub fn endpoint(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        match self.format {
            WireFormat::OpenAi => format!("{base}/chat/completions"),
            WireFormat::Anthropic => format!("{base}/messages"),
        }
    }

    pub fn api_key(&self) -> Result<Option<String>, LlmError> {
        match &self.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| LlmError::MissingKey(var.clone())),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    #[serde(default)]
    pub profiles: BTreeMap<String, LlmProfile>,
}

impl ProfileFile {
    pub fn parse(text: &str) -> Result<Self, LlmError> {
        toml::from_str(text).map_err(|e| LlmError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, name: &str) -> Result<&LlmProfile, LlmError> {
        self.profiles
            .get(name)
            .ok_or_else(|| LlmError::Config(format!("no profile named {name}")))
    }
}
