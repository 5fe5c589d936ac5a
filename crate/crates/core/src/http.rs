//! Blocking JSON-over-HTTP with bounded exponential-backoff retries, shared
//! by the chat, caption, and embedding endpoint clients.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("undecodable response: {0}")]
    Decode(String),
    #[error("client setup failed: {0}")]
    Client(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Retries after the first attempt, so at most `max_retries + 1` requests.
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay_ms: 500,
            max_delay_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

#[derive(Debug, Clone)]
pub struct JsonClient {
    client: reqwest::blocking::Client,
    bearer: Option<String>,
    policy: RetryPolicy,
}

impl JsonClient {
    pub fn new(bearer: Option<String>, policy: RetryPolicy) -> Result<Self, HttpError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| HttpError::Client(e.to_string()))?;
        Ok(Self {
            client,
            bearer,
            policy,
        })
    }

    /// POSTs `body` and returns the decoded response with the number of
    /// requests made. Transport errors, 429 and 5xx are retried; 401/403 are not.
    pub fn post(&self, url: &str, body: &Value) -> Result<(Value, u32), HttpError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            let mut req = self.client.post(url).json(body);
            if let Some(token) = &self.bearer {
                req = req.bearer_auth(token);
            }
            let failure = match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        let text = resp.text().map_err(|e| HttpError::Decode(e.to_string()))?;
                        return serde_json::from_str(&text)
                            .map(|v| (v, attempts))
                            .map_err(|e| HttpError::Decode(e.to_string()));
                    }
                    let code = status.as_u16();
                    if code == 401 || code == 403 {
                        return Err(HttpError::Auth { status: code });
                    }
                    let body = resp.text().unwrap_or_default();
                    if !(status.is_server_error() || code == 429) {
                        return Err(HttpError::Status { status: code, body });
                    }
                    format!("HTTP {code}: {body}")
                }
                Err(e) => e.to_string(),
            };
            if attempts > self.policy.max_retries {
                return Err(HttpError::Exhausted {
                    attempts,
                    last: failure,
                });
            }
            thread::sleep(self.policy.delay(attempts - 1));
        }
    }
}
