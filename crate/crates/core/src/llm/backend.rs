use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::{ChatMessage, DecodingParams, PromptKind};
use crate::http::{HttpError, JsonClient, RetryPolicy};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("scripted mock has no entry for {0:?}")]
    MockMiss(String),
    #[error("mock script {path}: {reason}")]
    MockScript { path: String, reason: String },
    #[error("chat response lacks choices[0].message.content")]
    BadResponse,
    #[error("replay cache: {0}")]
    Cache(String),
    #[error("no controller backend configured and no cached response for this {0} prompt")]
    Unconfigured(PromptKind),
}

/// A controller call. `kind`, `round` and `reask` are routing metadata and
/// are never sent over the wire.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub kind: PromptKind,
    pub round: u32,
    pub reask: u32,
    pub messages: Vec<ChatMessage>,
    pub params: DecodingParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub attempts: u32,
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError>;
}

/// OpenAI-compatible chat completions endpoint.
#[derive(Debug, Clone)]
pub struct OpenAiChat {
    url: String,
    model: String,
    client: JsonClient,
}

impl OpenAiChat {
    pub fn new(
        url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        policy: RetryPolicy,
    ) -> Result<Self, LlmError> {
        Ok(Self {
            url: url.into(),
            model: model.into(),
            client: JsonClient::new(api_key, policy)?,
        })
    }

    pub fn request_body(&self, request: &ChatRequest) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": request.messages,
            "temperature": request.params.temperature,
        });
        if let Some(max) = request.params.max_tokens {
            body["max_tokens"] = json!(max);
        }
        if let Some(seed) = request.params.seed {
            body["seed"] = json!(seed);
        }
        body
    }
}

impl ChatBackend for OpenAiChat {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError> {
        let (resp, attempts) = self.client.post(&self.url, &self.request_body(request))?;
        let text = resp
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or(LlmError::BadResponse)?;
        Ok(Completion {
            text: text.to_string(),
            attempts,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ScriptEntry {
    One(String),
    /// Indexed by re-ask number; the last element repeats.
    PerAttempt(Vec<String>),
}

/// Deterministic backend answering from a table keyed `"<kind>:<round>"`.
///
/// Lookup falls back to `"<kind>:*"` and then `"*"`. A value is either one
/// response or a list indexed by re-ask number.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(transparent)]
pub struct ScriptedMock {
    entries: HashMap<String, ScriptEntry>,
}

impl ScriptedMock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let err = |reason: String| LlmError::MockScript {
            path: path.display().to_string(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        Self::from_json_str(&text).map_err(|e| err(e.to_string()))
    }

    pub fn with(mut self, key: impl Into<String>, response: impl Into<String>) -> Self {
        self.entries
            .insert(key.into(), ScriptEntry::One(response.into()));
        self
    }

    pub fn with_attempts(
        mut self,
        key: impl Into<String>,
        responses: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        self.entries.insert(
            key.into(),
            ScriptEntry::PerAttempt(responses.into_iter().map(Into::into).collect()),
        );
        self
    }

    pub fn lookup(&self, kind: PromptKind, round: u32, reask: u32) -> Option<&str> {
        let exact = format!("{kind}:{round}");
        let any_round = format!("{kind}:*");
        let entry = self
            .entries
            .get(&exact)
            .or_else(|| self.entries.get(&any_round))
            .or_else(|| self.entries.get("*"))?;
        match entry {
            ScriptEntry::One(s) => Some(s),
            ScriptEntry::PerAttempt(list) => list
                .get(reask as usize)
                .or_else(|| list.last())
                .map(String::as_str),
        }
    }
}

impl ChatBackend for ScriptedMock {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError> {
        self.lookup(request.kind, request.round, request.reask)
            .map(|text| Completion {
                text: text.to_string(),
                attempts: 1,
            })
            .ok_or_else(|| LlmError::MockMiss(format!("{}:{}", request.kind, request.round)))
    }
}

/// Placeholder for runs served entirely from a replay cache: any call that
/// reaches it fails.
#[derive(Debug, Default, Clone, Copy)]
pub struct Unconfigured;

impl ChatBackend for Unconfigured {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError> {
        Err(LlmError::Unconfigured(request.kind))
    }
}
