//! HTTP client for remote inference servers speaking the minimal scoring
//! protocol: `POST /v1/score` with `{model, prefix, continuation}`, answered
//! by `{logprob_sum, token_count}` or an HTTP error status with `{error}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{LogProbScore, ScoreBackend, ScoreRequest};
use crate::error::ScoreError;

/// Default environment variable consulted for the endpoint URL.
pub const ENDPOINT_ENV: &str = "MORALIGN_ENDPOINT";
/// Default environment variable consulted for the bearer token.
pub const AUTH_TOKEN_ENV: &str = "MORALIGN_API_TOKEN";

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Base URL, e.g. `http://localhost:8000`; `/v1/score` is appended.
    pub endpoint: String,
    pub auth_token: Option<String>,
    /// Total attempts per request (first try included).
    pub attempts: u32,
    /// Backoff before the second attempt; doubles per retry.
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            auth_token: None,
            attempts: 3,
            initial_backoff: Duration::from_secs(1),
            timeout: Duration::from_secs(60),
        }
    }

    /// Reads the endpoint and token from the environment, preferring the
    /// explicit endpoint when given. The token variable name is
    /// configurable so deployments can bind their own secret.
    pub fn from_env(endpoint: Option<String>, token_env: &str) -> Option<Self> {
        let endpoint = endpoint.or_else(|| std::env::var(ENDPOINT_ENV).ok())?;
        let mut cfg = Self::new(endpoint);
        cfg.auth_token = std::env::var(token_env).ok();
        Some(cfg)
    }

    pub fn with_auth_token(mut self, token: impl Into<String>) -> Self {
        self.auth_token = Some(token.into());
        self
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.initial_backoff = backoff;
        self
    }

    pub fn with_attempts(mut self, attempts: u32) -> Self {
        self.attempts = attempts.max(1);
        self
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    prefix: &'a str,
    continuation: &'a str,
}

#[derive(Deserialize)]
struct WireResponse {
    logprob_sum: f64,
    token_count: u32,
}

#[derive(Deserialize)]
struct WireError {
    error: String,
}

/// Remote scoring backend. Scoring is idempotent by construction, so
/// transport failures and server errors are retried with exponential
/// backoff; client errors (4xx) are not.
pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent_config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build();
        Self {
            agent: ureq::Agent::new_with_config(agent_config),
            config,
        }
    }

    fn url(&self) -> String {
        format!("{}/v1/score", self.config.endpoint.trim_end_matches('/'))
    }

    fn attempt(&self, req: &ScoreRequest) -> Result<LogProbScore, AttemptError> {
        let body = WireRequest {
            model: &req.model_id,
            prefix: &req.prefix,
            continuation: &req.continuation,
        };
        let mut request = self.agent.post(self.url());
        if let Some(token) = &self.config.auth_token {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = request
            .send_json(&body)
            .map_err(|e| AttemptError::Retryable(e.to_string()))?;
        let status = response.status();
        if status.is_success() {
            let parsed: WireResponse = response
                .body_mut()
                .read_json()
                .map_err(|e| AttemptError::Retryable(format!("malformed response: {e}")))?;
            if parsed.token_count == 0 {
                return Err(AttemptError::Fatal(ScoreError::ZeroTokens));
            }
            return Ok(LogProbScore {
                logprob_sum: parsed.logprob_sum,
                token_count: parsed.token_count,
            });
        }
        let message = response
            .body_mut()
            .read_json::<WireError>()
            .map(|e| e.error)
            .unwrap_or_else(|_| format!("status {status}"));
        if status.is_server_error() {
            Err(AttemptError::Retryable(format!("{status}: {message}")))
        } else {
            Err(AttemptError::Fatal(ScoreError::Remote {
                status: status.as_u16(),
                message,
            }))
        }
    }
}

enum AttemptError {
    Retryable(String),
    Fatal(ScoreError),
}

impl ScoreBackend for RemoteBackend {
    fn version(&self) -> String {
        format!("remote/1 {}", self.config.endpoint)
    }

    fn score(&self, req: &ScoreRequest) -> Result<LogProbScore, ScoreError> {
        if req.continuation.is_empty() {
            return Err(ScoreError::EmptyContinuation);
        }
        let mut backoff = self.config.initial_backoff;
        let mut last_message = String::new();
        for attempt in 1..=self.config.attempts {
            match self.attempt(req) {
                Ok(score) => return Ok(score),
                Err(AttemptError::Fatal(err)) => return Err(err),
                Err(AttemptError::Retryable(message)) => {
                    log::warn!(
                        "scoring attempt {attempt}/{} failed: {message}",
                        self.config.attempts
                    );
                    last_message = message;
                    if attempt < self.config.attempts {
                        std::thread::sleep(backoff);
                        backoff *= 2;
                    }
                }
            }
        }
        Err(ScoreError::Transport {
            attempts: self.config.attempts,
            message: last_message,
        })
    }
}
