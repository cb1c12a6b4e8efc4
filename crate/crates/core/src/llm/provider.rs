//! Text-completion providers: one prompt in, one response out.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::prompt::Role;
use crate::extract::MethodSignature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Analyze(Role),
    GenerateTest,
    NormalizeSnippet,
    RefineTest,
}

/// One request. `api_id` and `signature` identify the subject so that
/// deterministic providers can answer without reading the prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionRequest {
    pub task: Task,
    pub api_id: String,
    pub signature: MethodSignature,
    pub prompt: String,
    /// Code under work: a retrieved snippet or the current draft.
    pub context: Option<String>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("provider returned HTTP {0}")]
    Status(u16),
    #[error("provider misconfigured: {0}")]
    Config(String),
}

impl ProviderError {
    /// Whether a retry could succeed.
    pub fn is_transient(&self) -> bool {
        !matches!(self, Self::Config(_))
    }
}

pub trait Provider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub provider_name: String,
    pub model_id: String,
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token.
    pub credential_env: String,
    pub max_in_flight: usize,
    /// Seconds.
    pub timeout: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            provider_name: "openai-compatible".into(),
            model_id: "gpt-4o-mini-2024-07-18".into(),
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            credential_env: "PERMAP_API_KEY".into(),
            max_in_flight: 4,
            timeout: 60,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.max_in_flight == 0 {
            return Err(ProviderError::Config("max_in_flight must be at least 1".into()));
        }
        if self.timeout == 0 {
            return Err(ProviderError::Config("timeout must be positive".into()));
        }
        Ok(())
    }
}

/// Chat-completions client for OpenAI-compatible endpoints.
pub struct HttpProvider {
    agent: ureq::Agent,
    config: ProviderConfig,
    token: String,
}

impl HttpProvider {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        if config.provider_name != "openai-compatible" {
            return Err(ProviderError::Config(format!("unknown provider {:?}", config.provider_name)));
        }
        let token = std::env::var(&config.credential_env)
            .ok()
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| ProviderError::Config(format!("credential variable {} is not set", config.credential_env)))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { agent, config, token })
    }
}

impl Provider for HttpProvider {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.config.model_id,
            "temperature": 0,
            "messages": [{"role": "user", "content": request.prompt}],
        });
        let mut response = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.token))
            .send_json(&body)
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => ProviderError::Timeout,
                other => ProviderError::Transport(other.to_string()),
            })?;
        let status = response.status().as_u16();
        if status != 200 {
            return Err(ProviderError::Status(status));
        }
        let value: Value = response.body_mut().read_json().map_err(|e| ProviderError::Transport(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Transport("response has no message content".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Attempts after the first.
    pub retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { retries: 2, base_delay: Duration::from_millis(250) }
    }
}

impl RetryPolicy {
    pub fn immediate(retries: u32) -> Self {
        Self { retries, base_delay: Duration::ZERO }
    }
}

/// Calls the provider, sleeping `base_delay * 2^n` before retry `n + 1`.
/// Returns the last error once retries are exhausted.
pub fn complete_with_retry(provider: &dyn Provider, request: &CompletionRequest, policy: RetryPolicy) -> Result<String, ProviderError> {
    let mut attempt = 0;
    loop {
        match provider.complete(request) {
            Ok(text) => return Ok(text),
            Err(e) if !e.is_transient() || attempt >= policy.retries => return Err(e),
            Err(e) => {
                log::debug!("attempt {} for {} failed: {e}", attempt + 1, request.api_id);
                if !policy.base_delay.is_zero() {
                    std::thread::sleep(policy.base_delay * 2u32.saturating_pow(attempt));
                }
                attempt += 1;
            }
        }
    }
}
