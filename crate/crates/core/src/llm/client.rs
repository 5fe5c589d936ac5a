use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::{
    ChatBackend, ChatMessage, ChatRequest, DecodingParams, LlmError, ModelExchange, ParseError,
    PromptKind, ReplayCache,
};

/// Appended to the prompt when a response could not be parsed.
pub const REASK_SUFFIX: &str = "Respond with only the JSON object.";

/// A backend plus optional replay cache, recording every exchange.
#[derive(Clone)]
pub struct LlmClient {
    backend: Arc<dyn ChatBackend>,
    cache: Option<ReplayCache>,
    params: DecodingParams,
    backend_calls: Arc<AtomicU64>,
}

/// Outcome of an ask-with-re-asks: the parsed value, or `None` when every
/// attempt failed to parse, plus all exchanges in order.
#[derive(Debug)]
pub struct Asked<T> {
    pub value: Option<T>,
    pub exchanges: Vec<ModelExchange>,
    pub last_error: Option<ParseError>,
}

impl LlmClient {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            backend,
            cache: None,
            params: DecodingParams::default(),
            backend_calls: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn with_cache(mut self, cache: ReplayCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_params(mut self, params: DecodingParams) -> Self {
        self.params = params;
        self
    }

    pub fn params(&self) -> &DecodingParams {
        &self.params
    }

    /// Calls that reached the backend (cache hits excluded).
    pub fn backend_calls(&self) -> u64 {
        self.backend_calls.load(Ordering::Relaxed)
    }

    /// Sends `prompt` as a single user message and returns the response
    /// verbatim, consulting the replay cache first.
    pub fn complete(
        &self,
        kind: PromptKind,
        round: u32,
        reask: u32,
        prompt: &str,
    ) -> Result<ModelExchange, LlmError> {
        let messages = vec![ChatMessage::user(prompt)];
        let key = ReplayCache::key(kind, &messages, &self.params);
        if let Some(cache) = &self.cache {
            if let Some(text) = cache.get(&key)? {
                return Ok(ModelExchange {
                    kind,
                    round,
                    reask,
                    messages,
                    params: self.params.clone(),
                    response: text,
                    attempts: 0,
                    cached: true,
                });
            }
        }
        let request = ChatRequest {
            kind,
            round,
            reask,
            messages,
            params: self.params.clone(),
        };
        self.backend_calls.fetch_add(1, Ordering::Relaxed);
        let completion = self.backend.complete(&request)?;
        if let Some(cache) = &self.cache {
            cache.put(&key, &completion.text)?;
        }
        Ok(ModelExchange {
            kind,
            round,
            reask,
            messages: request.messages,
            params: request.params,
            response: completion.text,
            attempts: completion.attempts,
            cached: false,
        })
    }

    /// Asks, parses, and re-asks up to `reasks` times with [`REASK_SUFFIX`]
    /// appended. Transport errors abort; parse errors do not.
    pub fn ask<T>(
        &self,
        kind: PromptKind,
        round: u32,
        prompt: &str,
        reasks: u32,
        parse: impl Fn(&str) -> Result<T, ParseError>,
    ) -> Result<Asked<T>, LlmError> {
        let mut exchanges = Vec::new();
        let mut last_error = None;
        for reask in 0..=reasks {
            let text = if reask == 0 {
                prompt.to_string()
            } else {
                format!("{prompt}\n{REASK_SUFFIX}")
            };
            let exchange = self.complete(kind, round, reask, &text)?;
            let parsed = parse(&exchange.response);
            exchanges.push(exchange);
            match parsed {
                Ok(value) => {
                    return Ok(Asked {
                        value: Some(value),
                        exchanges,
                        last_error: None,
                    })
                }
                Err(e) => last_error = Some(e),
            }
        }
        Ok(Asked {
            value: None,
            exchanges,
            last_error,
        })
    }
}
