//! Controller-model plumbing: prompt rendering, chat backends, replay cache,
//! and lenient parsing of the pseudo-JSON the prompts ask for.

pub mod backend;
pub mod cache;
pub mod client;
pub mod parse;
pub mod prompts;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use backend::{ChatBackend, ChatRequest, Completion, LlmError, OpenAiChat, ScriptedMock, Unconfigured};
pub use cache::ReplayCache;
pub use client::{Asked, LlmClient, REASK_SUFFIX};
pub use parse::{parse_answer, parse_confidence, parse_plan, parse_plan_whole_video, ParseError};
pub use prompts::{
    render_predict_prompt, render_reflect_prompt, render_search_prompt,
    render_search_prompt_unscoped, PromptBundle, PromptError, PromptSlots,
};

/// Which of the three controller calls a prompt belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Predict,
    Reflect,
    Search,
}

impl PromptKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::Predict => "predict",
            PromptKind::Reflect => "reflect",
            PromptKind::Search => "search",
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Self-assessed sufficiency of the information behind a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Confidence {
    Insufficient = 1,
    Partial = 2,
    Sufficient = 3,
}

impl Confidence {
    pub fn level(self) -> u8 {
        self as u8
    }

    pub fn from_level(level: u8) -> Option<Self> {
        match level {
            1 => Some(Self::Insufficient),
            2 => Some(Self::Partial),
            3 => Some(Self::Sufficient),
            _ => None,
        }
    }
}

impl TryFrom<u8> for Confidence {
    type Error = String;

    fn try_from(level: u8) -> Result<Self, Self::Error> {
        Self::from_level(level).ok_or_else(|| format!("confidence level {level} not in 1..=3"))
    }
}

impl From<Confidence> for u8 {
    fn from(c: Confidence) -> u8 {
        c.level()
    }
}

/// A multiple-choice question; options are numbered from 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub text: String,
    pub options: Vec<String>,
}

impl Question {
    pub fn new(text: impl Into<String>, options: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            text: text.into(),
            options: options.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_tokens: None,
            seed: Some(0),
        }
    }
}

/// One controller call as it happened, kept verbatim for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelExchange {
    pub kind: PromptKind,
    pub round: u32,
    /// 0 for the first ask, then 1.. for each re-ask after a parse failure.
    pub reask: u32,
    pub messages: Vec<ChatMessage>,
    pub params: DecodingParams,
    pub response: String,
    /// Transport attempts made; 0 when served from the replay cache.
    pub attempts: u32,
    pub cached: bool,
}
