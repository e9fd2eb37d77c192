//! Blocking chat-completion client with retries and a shared request budget.

use std::num::NonZeroU32;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use governor::clock::{Clock, DefaultClock};
use governor::{DefaultDirectRateLimiter, Quota, RateLimiter};
use reqwest::blocking::{Client, RequestBuilder};
use reqwest::StatusCode;
use serde_json::{json, Value};

use crate::profile::{LlmProfile, WireFormat};
use crate::LlmError;

const ANTHROPIC_VERSION: &str = "2023-06-01";

/// Token bucket shared by every client that should draw from one budget.
#[derive(Clone)]
pub struct RequestBudget(Arc<DefaultDirectRateLimiter>);

impl RequestBudget {
    pub fn per_minute(n: NonZeroU32) -> Self {
        Self(Arc::new(RateLimiter::direct(Quota::per_minute(n))))
    }

    /// Blocks until a request may be sent.
    pub fn acquire(&self) {
        let clock = DefaultClock::default();
        while let Err(not_until) = self.0.check() {
            thread::sleep(not_until.wait_time_from(clock.now()));
        }
    }
}

impl std::fmt::Debug for RequestBudget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("RequestBudget")
    }
}

#[derive(Debug, Clone)]
pub struct LlmClient {
    profile: LlmProfile,
    http: Client,
    budget: Option<RequestBudget>,
    attempts: Arc<std::sync::atomic::AtomicU64>,
}

impl LlmClient {
    pub fn new(profile: LlmProfile) -> Result<Self, LlmError> {
        let budget = profile
            .requests_per_minute
            .and_then(NonZeroU32::new)
            .map(RequestBudget::per_minute);
        Self::with_budget(profile, budget)
    }

    pub fn with_budget(profile: LlmProfile, budget: Option<RequestBudget>) -> Result<Self, LlmError> {
        let http = Client::builder()
            .timeout(Duration::from_secs_f64(profile.request_timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self {
            profile,
            http,
            budget,
            attempts: Arc::default(),
        })
    }

    pub fn profile(&self) -> &LlmProfile {
        &self.profile
    }

    /// HTTP requests sent so far, retries included.
    pub fn attempts(&self) -> u64 {
        self.attempts.load(std::sync::atomic::Ordering::Relaxed)
    }

    /// One system + user round trip. Transient failures are retried with
    /// exponential backoff (or the server's `Retry-After`); once retries run
    /// out the last error is wrapped in [`LlmError::TransportFailed`].
    pub fn complete(&self, user: &str) -> Result<String, LlmError> {
        let key = self.profile.api_key()?;
        let body = self.request_body(user);
        let mut delay = self.profile.backoff_base_secs;
        let mut attempt = 0;
        loop {
            match self.send_once(&body, key.as_deref()) {
                Ok(text) => return Ok(text),
                Err(e) if e.is_transient() && attempt < self.profile.transport_retries => {
                    let wait = e.retry_after().unwrap_or(delay).min(self.profile.backoff_max_secs);
                    log::warn!("attempt {} failed ({e}); retrying in {wait:.2}s", attempt + 1);
                    thread::sleep(Duration::from_secs_f64(wait.max(0.0)));
                    delay *= 2.0;
                    attempt += 1;
                }
                Err(e) if e.is_transient() => {
                    return Err(LlmError::TransportFailed {
                        attempts: attempt + 1,
                        last: Box::new(e),
                    })
                }
                Err(e) => return Err(e),
            }
        }
    }

    pub fn request_body(&self, user: &str) -> Value {
        let p = &self.profile;
        match p.format {
            WireFormat::OpenAi => json!({
                "model": p.model,
                "temperature": p.temperature,
                "max_tokens": p.max_tokens,
                "messages": [
                    {"role": "system", "content": p.system_prompt},
                    {"role": "user", "content": user},
                ],
            }),
            WireFormat::Anthropic => json!({
                "model": p.model,
                "temperature": p.temperature,
                "max_tokens": p.max_tokens,
                "system": p.system_prompt,
                "messages": [{"role": "user", "content": user}],
            }),
        }
    }

    fn authorize(&self, req: RequestBuilder, key: Option<&str>) -> RequestBuilder {
        match (self.profile.format, key) {
            (WireFormat::OpenAi, Some(k)) => req.bearer_auth(k),
            (WireFormat::Anthropic, Some(k)) => req
                .header("x-api-key", k)
                .header("anthropic-version", ANTHROPIC_VERSION),
            (WireFormat::Anthropic, None) => req.header("anthropic-version", ANTHROPIC_VERSION),
            (WireFormat::OpenAi, None) => req,
        }
    }

    fn send_once(&self, body: &Value, key: Option<&str>) -> Result<String, LlmError> {
        if let Some(b) = &self.budget {
            b.acquire();
        }
        self.attempts.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        log::debug!("request to {}: {body}", self.profile.endpoint());
        let req = self.authorize(self.http.post(self.profile.endpoint()).json(body), key);
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        let retry_after = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<f64>().ok());
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::Transport(e.to_string())
            }
        })?;
        log::debug!("response {status}: {text}");
        if status == StatusCode::TOO_MANY_REQUESTS {
            return Err(LlmError::RateLimited { retry_after });
        }
        if !status.is_success() {
            return Err(LlmError::Http {
                status: status.as_u16(),
                body: text,
            });
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| LlmError::BadResponse(e.to_string()))?;
        extract_text(self.profile.format, &value)
    }
}

/// Pulls the completion text out of a response body.
pub fn extract_text(format: WireFormat, value: &Value) -> Result<String, LlmError> {
    let text = match format {
        WireFormat::OpenAi => value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string),
        WireFormat::Anthropic => value.get("content").and_then(Value::as_array).map(|blocks| {
            blocks
                .iter()
                .filter(|b| b.get("type").and_then(Value::as_str) == Some("text"))
                .filter_map(|b| b.get("text").and_then(Value::as_str))
                .collect::<String>()
        }),
    };
    text.ok_or_else(|| LlmError::BadResponse(format!("no completion text in {value}")))
}
