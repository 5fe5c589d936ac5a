//! Run traces: one JSON line per round, then a summary line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::llm::{Confidence, ModelExchange, Question};
use crate::retrieval::{Observation, RetrievalPlan};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentAction {
    Answer { answer: usize },
    Search { plan: RetrievalPlan },
}

/// Why a round ended the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Confident,
    MaxRounds,
    EmptyPlan,
    NothingUnseen,
    NoProgress,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Confident => "confident",
            StopReason::MaxRounds => "max_rounds",
            StopReason::EmptyPlan => "empty_plan",
            StopReason::NothingUnseen => "nothing_unseen",
            StopReason::NoProgress => "no_progress",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    /// State at the start of the round.
    pub captions: BTreeMap<u32, String>,
    pub exchanges: Vec<ModelExchange>,
    pub prediction: usize,
    pub prediction_fallback: bool,
    pub rationale: String,
    /// `None` when self-evaluation is disabled.
    pub confidence: Option<Confidence>,
    pub confidence_fallback: bool,
    pub plan_fallback: bool,
    pub action: AgentAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Observation>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub new_captions: BTreeMap<u32, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl RoundRecord {
    pub fn seen(&self) -> Vec<u32> {
        self.captions.keys().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub answer: usize,
    pub rounds: usize,
    pub frames_seen: usize,
    pub degraded: bool,
    #[serde(default)]
    pub video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<Question>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub config: serde_json::Value,
}

/// The full state/action/observation sequence of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub video_id: String,
    pub question: Option<Question>,
    pub config: serde_json::Value,
    pub rounds: Vec<RoundRecord>,
    pub answer: Option<usize>,
    pub frames_seen: usize,
    pub degraded: bool,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace has no summary line")]
    MissingSummary,
    #[error("trace line {0} follows the summary")]
    AfterSummary(usize),
    #[error("summary says {summary} rounds but {found} round lines were found")]
    RoundCount { summary: usize, found: usize },
}

impl RunTrace {
    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            answer: self.answer.unwrap_or(0),
            rounds: self.rounds.len(),
            frames_seen: self.frames_seen,
            degraded: self.degraded,
            video_id: self.video_id.clone(),
            question: self.question.clone(),
            config: self.config.clone(),
        }
    }

    /// Line-delimited JSON, newline-terminated.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.rounds {
            out.push_str(&serde_json::to_string(r).expect("round record serializes"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.summary()).expect("summary serializes"));
        out.push('\n');
        out
    }

    pub fn from_lines(text: &str) -> Result<Self, TraceError> {
        let mut trace = RunTrace::default();
        let mut summary: Option<TraceSummary> = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            if summary.is_some() {
                return Err(TraceError::AfterSummary(i + 1));
            }
            let json = |source| TraceError::Json { line: i + 1, source };
            let value: serde_json::Value = serde_json::from_str(line).map_err(json)?;
            if value.get("round").is_some() {
                trace.rounds.push(serde_json::from_value(value).map_err(json)?);
            } else {
                summary = Some(serde_json::from_value(value).map_err(json)?);
            }
        }
        let s = summary.ok_or(TraceError::MissingSummary)?;
        if s.rounds != trace.rounds.len() {
            return Err(TraceError::RoundCount {
                summary: s.rounds,
                found: trace.rounds.len(),
            });
        }
        trace.answer = Some(s.answer);
        trace.frames_seen = s.frames_seen;
        trace.degraded = s.degraded;
        trace.video_id = s.video_id;
        trace.question = s.question;
        trace.config = s.config;
        Ok(trace)
    }

    /// SHA-256 over the serialized trace with wall-clock timings removed.
    pub fn fingerprint(&self) -> String {
        let mut stripped = self.clone();
        for r in &mut stripped.rounds {
            r.elapsed_ms = None;
        }
        hex::encode(Sha256::digest(stripped.to_lines().as_bytes()))
    }

    /// Human-readable rendering, one block per round. Prompts and raw
    /// responses are shown only when `full` is set.
    pub fn pretty(&self, full: bool) -> String {
        let mut out = String::new();
        for r in &self.rounds {
            let _ = writeln!(out, "== round {} ==", r.round);
            let _ = writeln!(out, "seen ({}): {:?}", r.captions.len(), r.seen());
            let _ = writeln!(
                out,
                "prediction: {}{}",
                r.prediction,
                if r.prediction_fallback { " (fallback)" } else { "" }
            );
            match r.confidence {
                Some(c) => {
                    let _ = writeln!(
                        out,
                        "confidence: {}{}",
                        c.level(),
                        if r.confidence_fallback { " (fallback)" } else { "" }
                    );
                }
                None => {
                    let _ = writeln!(out, "confidence: (self-evaluation off)");
                }
            }
            match &r.action {
                AgentAction::Answer { answer } => {
                    let _ = writeln!(out, "action: answer {answer}");
                }
                AgentAction::Search { plan } => {
                    let _ = writeln!(out, "action: search ({} queries)", plan.len());
                    for item in &plan.items {
                        let _ = writeln!(out, "  segment {}: {}", item.segment_id, item.query);
                    }
                }
            }
            if let Some(stop) = r.stop {
                let _ = writeln!(out, "stop: {}", stop.as_str());
            }
            if let Some(obs) = &r.observation {
                let _ = writeln!(out, "retrieved: {:?}", obs.frames());
            }
            if full {
                for x in &r.exchanges {
                    let _ = writeln!(out, "--- {} (re-ask {}) prompt ---", x.kind, x.reask);
                    for m in &x.messages {
                        let _ = writeln!(out, "{}", m.content);
                    }
                    let _ = writeln!(out, "--- {} response ---\n{}", x.kind, x.response);
                }
            }
        }
        let _ = writeln!(
            out,
            "== summary ==\nanswer: {}\nrounds: {}\nframes seen: {}\ndegraded: {}",
            self.answer.map_or("-".to_string(), |a| a.to_string()),
            self.rounds.len(),
            self.frames_seen,
            self.degraded
        );
        out
    }
}
