//! Remote chat-completion backends for the brigade dispatcher.

mod client;
mod profile;

use brigade_core::planners::{PlanRequest, Planner, PlannerError};
use thiserror::Error;

pub use client::{extract_text, LlmClient, RequestBudget};
pub use profile::{LlmProfile, ProfileFile, WireFormat, DEFAULT_SYSTEM_PROMPT, DEFAULT_TEMPERATURE};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("environment variable {0} is not set")]
    MissingKey(String),
    #[error("bad backend configuration: {0}")]
    Config(String),
    #[error("rate limited")]
    RateLimited { retry_after: Option<f64> },
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    BadResponse(String),
    #[error("gave up after {attempts} attempts: {last}")]
    TransportFailed { attempts: u32, last: Box<LlmError> },
}

impl LlmError {
    pub fn code(&self) -> &'static str {
        match self {
            LlmError::MissingKey(_) => "missing_api_key",
            LlmError::Config(_) => "bad_config",
            LlmError::RateLimited { .. } => "rate_limited",
            LlmError::Timeout => "timeout",
            LlmError::Transport(_) => "transport",
            LlmError::Http { .. } => "http_error",
            LlmError::BadResponse(_) => "bad_response",
            LlmError::TransportFailed { .. } => "transport_failed",
        }
    }

    /// Rate limits, timeouts, connection failures and server errors.
    pub fn is_transient(&self) -> bool {
        match self {
            LlmError::RateLimited { .. } | LlmError::Timeout | LlmError::Transport(_) => true,
            LlmError::Http { status, .. } => *status >= 500,
            _ => false,
        }
    }

    pub fn retry_after(&self) -> Option<f64> {
        match self {
            LlmError::RateLimited { retry_after } => *retry_after,
            _ => None,
        }
    }
}

/// Sends each assembled prompt to a chat-completion endpoint.
#[derive(Debug, Clone)]
pub struct LlmPlanner {
    name: String,
    client: LlmClient,
}

impl LlmPlanner {
    pub fn new(name: impl Into<String>, client: LlmClient) -> Self {
        Self {
            name: name.into(),
            client,
        }
    }

    pub fn client(&self) -> &LlmClient {
        &self.client
    }
}

impl Planner for LlmPlanner {
    fn name(&self) -> String {
        format!("llm:{}:{}", self.name, self.client.profile().model)
    }

    fn complete(&mut self, request: &PlanRequest<'_>) -> Result<String, PlannerError> {
        self.client.complete(request.prompt).map_err(|e| match e {
            LlmError::TransportFailed { .. } => PlannerError::Transport(e.to_string()),
            other => PlannerError::Other(format!("{}: {other}", other.code())),
        })
    }
}
