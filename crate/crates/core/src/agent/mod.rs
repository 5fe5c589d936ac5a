//! The answer/search controller.
//!
//! Each round: predict an answer with chain-of-thought, self-reflect to get a
//! confidence level, then either answer (confidence at or above the
//! threshold, or the last round) or ask for missing information, retrieve
//! one frame per query within its segment, caption the new frames, and merge
//! them into the state.

pub mod config;
pub mod trace;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

pub use config::{ConfigError, LoopConfig};
pub use trace::{AgentAction, RoundRecord, RunTrace, StopReason, TraceError, TraceSummary};

use crate::assets::VideoAssets;
use crate::captioner::{CaptionBackend, CaptionError, CaptionRequest};
use crate::llm::{
    parse_answer, parse_confidence, parse_plan, parse_plan_whole_video, render_predict_prompt,
    render_reflect_prompt, render_search_prompt, render_search_prompt_unscoped, Confidence,
    LlmClient, LlmError, PromptError, PromptKind, Question,
};
use crate::retrieval::{
    execute_plan, partition_segments, whole_video_segment, RetrievalError, RetrievalPlan, Segment,
    TextEmbedder,
};
use crate::state::{init_state, AgentState, StateError};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("video has {0} frames; at least 2 are needed")]
    TooShort(u32),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("controller call failed: {0}")]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("captioning frame {frame} failed: {source}")]
    Caption {
        frame: u32,
        #[source]
        source: CaptionError,
    },
}

/// A failed run with everything recorded up to the failure.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct RunFailure {
    #[source]
    pub error: AgentError,
    pub partial: Box<RunTrace>,
}

/// The three model roles the loop depends on.
#[derive(Clone)]
pub struct Backends {
    pub llm: LlmClient,
    pub captioner: Arc<dyn CaptionBackend>,
    pub embedder: Arc<dyn TextEmbedder>,
}

/// One predict → reflect → decide round. Returns the action, the state
/// carrying the new prediction, and the round record (without observation).
pub fn step(
    state: &AgentState,
    question: &Question,
    assets: &VideoAssets,
    config: &LoopConfig,
    backends: &Backends,
) -> Result<(AgentAction, AgentState, RoundRecord), AgentError> {
    let frames = assets.frame_count();
    let round = state.round;
    let llm = &backends.llm;
    let cap = config.caption_char_cap;
    let mut exchanges = Vec::new();

    let predict = render_predict_prompt(state, question, frames, config.fps, cap)?;
    let options = question.options.len();
    let asked = llm.ask(PromptKind::Predict, round, &predict.text, config.parse_retries, |raw| {
        parse_answer(raw, options)
    })?;
    let reasoning = asked
        .exchanges
        .last()
        .map(|x| x.response.clone())
        .unwrap_or_default();
    exchanges.extend(asked.exchanges);
    let prediction_fallback = asked.value.is_none();
    let (prediction, rationale) = asked.value.unwrap_or((0, String::new()));

    let mut next = state.clone();
    next.last_prediction = Some(prediction);
    next.last_rationale = Some(rationale.clone());

    let mut confidence_fallback = false;
    let confidence = if config.self_evaluation {
        if reasoning.trim().is_empty() {
            confidence_fallback = true;
            Some(Confidence::Insufficient)
        } else {
            let reflect =
                render_reflect_prompt(state, question, &reasoning, frames, config.fps, cap)?;
            let asked = llm.ask(
                PromptKind::Reflect,
                round,
                &reflect.text,
                config.parse_retries,
                parse_confidence,
            )?;
            exchanges.extend(asked.exchanges);
            confidence_fallback = asked.value.is_none();
            Some(asked.value.unwrap_or(Confidence::Insufficient))
        }
    } else {
        None
    };

    let mut record = RoundRecord {
        round,
        captions: state.captions().clone(),
        exchanges: Vec::new(),
        prediction,
        prediction_fallback,
        rationale,
        confidence,
        confidence_fallback,
        plan_fallback: false,
        action: AgentAction::Answer { answer: prediction },
        stop: None,
        observation: None,
        new_captions: BTreeMap::new(),
        elapsed_ms: None,
    };

    let level = confidence.unwrap_or(Confidence::Insufficient);
    let stop = if level >= config.confidence_threshold {
        Some(StopReason::Confident)
    } else if round >= config.max_rounds {
        Some(StopReason::MaxRounds)
    } else {
        None
    };
    if let Some(stop) = stop {
        record.stop = Some(stop);
        record.exchanges = exchanges;
        return Ok((record.action.clone(), next, record));
    }

    let segments = search_segments(state, frames, config)?;
    if segments.iter().all(Segment::is_empty) {
        record.stop = Some(StopReason::NothingUnseen);
        record.exchanges = exchanges;
        return Ok((record.action.clone(), next, record));
    }
    let cap_q = config.max_queries;
    let search = if config.segment_selection {
        render_search_prompt(state, question, &segments, frames, config.fps, cap)?
    } else {
        render_search_prompt_unscoped(state, question, frames, config.fps, cap)?
    };
    let asked = if config.segment_selection {
        llm.ask(PromptKind::Search, round, &search.text, config.parse_retries, |raw| {
            parse_plan(raw, &segments, cap_q)
        })?
    } else {
        llm.ask(PromptKind::Search, round, &search.text, config.parse_retries, |raw| {
            parse_plan_whole_video(raw, cap_q)
        })?
    };
    exchanges.extend(asked.exchanges);
    record.exchanges = exchanges;
    record.plan_fallback = asked.value.is_none();
    let plan = asked.value.unwrap_or_default();
    if plan.is_empty() {
        record.stop = Some(StopReason::EmptyPlan);
        return Ok((record.action.clone(), next, record));
    }
    record.action = AgentAction::Search { plan };
    Ok((record.action.clone(), next, record))
}

/// Segments offered to the search prompt for `state`.
pub fn search_segments(
    state: &AgentState,
    frames: u32,
    config: &LoopConfig,
) -> Result<Vec<Segment>, AgentError> {
    let seen = state.seen_vec();
    Ok(if config.segment_selection {
        partition_segments(&seen, frames)?
    } else {
        vec![whole_video_segment(&seen, frames)]
    })
}

/// Runs the full loop for one question and returns the answer with its trace.
pub fn run(
    question: &Question,
    assets: &VideoAssets,
    config: &LoopConfig,
    backends: &Backends,
) -> Result<(usize, RunTrace), RunFailure> {
    let mut trace = RunTrace {
        video_id: assets.video_id().to_string(),
        question: Some(question.clone()),
        config: serde_json::to_value(config).unwrap_or_default(),
        ..Default::default()
    };
    match run_inner(question, assets, config, backends, &mut trace) {
        Ok(answer) => Ok((answer, trace)),
        Err(error) => Err(RunFailure {
            error,
            partial: Box::new(trace),
        }),
    }
}

fn run_inner(
    question: &Question,
    assets: &VideoAssets,
    config: &LoopConfig,
    backends: &Backends,
    trace: &mut RunTrace,
) -> Result<usize, AgentError> {
    config.validate()?;
    let frames = assets.frame_count();
    if frames < 2 {
        return Err(AgentError::TooShort(frames));
    }
    let backends = &Backends {
        llm: backends.llm.clone().with_params(config.decoding.clone()),
        ..backends.clone()
    };
    let init = config.init_frames.min(frames);
    let mut state = init_state(assets, init, backends.captioner.as_ref(), config.caption_window)?;
    trace.frames_seen = state.len();

    let mut stalled = 0;
    for round in 1..=config.max_rounds {
        let started = Instant::now();
        state.round = round;
        let (action, next, mut record) = step(&state, question, assets, config, backends)?;
        state = next;
        let answer = record.prediction;
        let fallback = record.prediction_fallback;

        let plan = match action {
            AgentAction::Answer { .. } => {
                finish_round(trace, record, started, config);
                trace.answer = Some(answer);
                trace.degraded = fallback;
                trace.frames_seen = state.len();
                return Ok(answer);
            }
            AgentAction::Search { plan } => plan,
        };

        let observed = observe(&state, &plan, assets, config, backends);
        let (observation, new_captions) = match observed {
            Ok(v) => v,
            Err(e) => {
                finish_round(trace, record, started, config);
                return Err(e);
            }
        };
        state = state.merge(&new_captions, frames)?;
        let progressed = !observation.is_empty();
        record.observation = Some(observation);
        record.new_captions = new_captions;
        trace.frames_seen = state.len();

        stalled = if progressed { 0 } else { stalled + 1 };
        if stalled >= 2 {
            record.stop = Some(StopReason::NoProgress);
            finish_round(trace, record, started, config);
            trace.answer = Some(answer);
            trace.degraded = fallback;
            return Ok(answer);
        }
        finish_round(trace, record, started, config);
    }
    // every final round answers, so the loop always returns above
    unreachable!("round {} did not answer", config.max_rounds)
}

fn observe(
    state: &AgentState,
    plan: &RetrievalPlan,
    assets: &VideoAssets,
    config: &LoopConfig,
    backends: &Backends,
) -> Result<(crate::retrieval::Observation, BTreeMap<u32, String>), AgentError> {
    let segments = search_segments(state, assets.frame_count(), config)?;
    let seen = state.seen_vec();
    let observation = execute_plan(assets, plan, &segments, &seen, backends.embedder.as_ref())?;
    let mut captions = BTreeMap::new();
    for frame in observation.frames() {
        let text = backends
            .captioner
            .caption(assets, &CaptionRequest::new(frame, config.caption_window))
            .map_err(|source| AgentError::Caption { frame, source })?;
        captions.insert(frame, text);
    }
    Ok((observation, captions))
}

fn finish_round(trace: &mut RunTrace, mut record: RoundRecord, started: Instant, config: &LoopConfig) {
    if config.record_timing {
        record.elapsed_ms = Some(started.elapsed().as_millis() as u64);
    }
    trace.rounds.push(record);
}
