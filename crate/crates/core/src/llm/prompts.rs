//! The three controller prompts: predict an answer, self-reflect on it, and
//! ask for missing information.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{PromptKind, Question};
use crate::retrieval::Segment;
use crate::state::AgentState;

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("state has no captions")]
    EmptyState,
    #[error("question needs at least 2 options, got {0}")]
    TooFewOptions(usize),
    #[error("no reasoning to reflect on")]
    EmptyReasoning,
    #[error("no segment has unseen frames")]
    NoSegments,
}

/// Everything substituted into a template. Rendering depends on nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSlots {
    pub frames: u32,
    pub fps: u32,
    pub caption_map: String,
    pub seen_count: usize,
    pub question: Question,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_ids: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub text: String,
    pub slots: PromptSlots,
}

const PREDICT_INSTRUCTION: &str = "Please think step-by-step and write the best answer index in Json format {'final_answer': 'xxx'}. Note that only one answer is returned for the question.";

const REFLECT_CRITERIA: &str = "Criteria for Evaluation:
Insufficient Information (Confidence Level: 1): If information is too lacking for a reasonable conclusion.
Partial Information (Confidence Level: 2): If information partially supports an informed guess.
Sufficient Information (Confidence Level: 3): If information fully supports a well-informed decision.
Assessment Focus:
Evaluate based on the relevance, completeness, and clarity of the provided information in relation to the decision-making context.
Please generate the confidence with JSON format {'confidence': 'xxx\u{2019}}";

const SEARCH_STEP_TWO: &str = "2. Determine which segments are likely to contain frames that are most relevant to the question. These frames should capture key visual elements, such as objects, humans, interactions, actions, and scenes, that are supportive to answer the question.
For each frame identified as potentially relevant, provide a concise description focusing on essential visual elements. Use a single sentence per frame. If the specifics of a segment's visual content are uncertain based on the current information, use placeholders for specific actions or objects, but ensure the description still conveys the segment's relevance to the query.
Select multiple frames from one segment if necessary to gather comprehensive insights.";

const UNSCOPED_STEPS: &str = "1. Determine which moments of the video are likely to contain frames that are most relevant to the question. These frames should capture key visual elements, such as objects, humans, interactions, actions, and scenes, that are supportive to answer the question.
For each frame identified as potentially relevant, provide a concise description focusing on essential visual elements. Use a single sentence per frame. If the specifics of the video's visual content are uncertain based on the current information, use placeholders for specific actions or objects, but ensure the description still conveys the frame's relevance to the query.
Select multiple frames if necessary to gather comprehensive insights.";

fn check(state: &AgentState, question: &Question) -> Result<(), PromptError> {
    if state.is_empty() {
        return Err(PromptError::EmptyState);
    }
    if question.options.len() < 2 {
        return Err(PromptError::TooFewOptions(question.options.len()));
    }
    Ok(())
}

fn slots(state: &AgentState, question: &Question, frames: u32, fps: u32, cap: Option<usize>) -> PromptSlots {
    PromptSlots {
        frames,
        fps,
        caption_map: state.render_caption_map_capped(cap),
        seen_count: state.len(),
        question: question.clone(),
        reasoning: None,
        segment_ids: None,
    }
}

fn question_block(q: &Question) -> String {
    let mut out = String::from("```\n");
    out.push_str(&q.text);
    out.push('\n');
    for (i, opt) in q.options.iter().enumerate() {
        out.push_str(&format!("{i}. {opt}\n"));
    }
    out.push_str("```");
    out
}

fn predict_text(s: &PromptSlots) -> String {
    format!(
        "Given a video that has {} frames, the frames are decoded at {} fps. Given the following descriptions of the sampled frames in the video:\n{}\nPlease answer the following question:\n{}\n{PREDICT_INSTRUCTION}",
        s.frames,
        s.fps,
        s.caption_map,
        question_block(&s.question),
    )
}

/// Chain-of-thought answer prompt ending in a `final_answer` literal request.
pub fn render_predict_prompt(
    state: &AgentState,
    question: &Question,
    frames: u32,
    fps: u32,
    caption_cap: Option<usize>,
) -> Result<PromptBundle, PromptError> {
    check(state, question)?;
    let slots = slots(state, question, frames, fps, caption_cap);
    Ok(PromptBundle {
        kind: PromptKind::Predict,
        text: predict_text(&slots),
        slots,
    })
}

/// Embeds the predict prompt and the model's full reasoning, then asks for a
/// 1–3 confidence level.
pub fn render_reflect_prompt(
    state: &AgentState,
    question: &Question,
    reasoning: &str,
    frames: u32,
    fps: u32,
    caption_cap: Option<usize>,
) -> Result<PromptBundle, PromptError> {
    check(state, question)?;
    let reasoning = reasoning.trim_end();
    if reasoning.trim().is_empty() {
        return Err(PromptError::EmptyReasoning);
    }
    let mut slots = slots(state, question, frames, fps, caption_cap);
    slots.reasoning = Some(reasoning.to_string());
    let text = format!(
        "Please assess the confidence level in the decision-making process.\nThe provided information is as as follows,\n{}\nThe decision making process is as follows,\n{reasoning}\n{REFLECT_CRITERIA}",
        predict_text(&slots),
    );
    Ok(PromptBundle {
        kind: PromptKind::Reflect,
        text,
        slots,
    })
}

fn search_header(s: &PromptSlots, count: &str) -> String {
    format!(
        "Given a video that has {} frames, the frames are decoded at {} fps. Given the following descriptions of {count} uniformly sampled frames in the video:\n{}\nTo answer the following question:\n{}\nHowever, the information in the initial {count} frames is not suffient.\nObjective:\nOur goal is to identify additional frames that contain crucial information necessary for answering the question. These frames should not only address the query directly but should also complement the insights gleaned from the descriptions of the initial {count} frames.\nTo achieve this, we will:\n",
        s.frames,
        s.fps,
        s.caption_map,
        question_block(&s.question),
    )
}

/// Asks which segments to search and what to look for. Only segments with
/// unseen frames are offered.
pub fn render_search_prompt(
    state: &AgentState,
    question: &Question,
    segments: &[Segment],
    frames: u32,
    fps: u32,
    caption_cap: Option<usize>,
) -> Result<PromptBundle, PromptError> {
    check(state, question)?;
    let live: Vec<u32> = segments.iter().filter(|s| !s.is_empty()).map(|s| s.id).collect();
    if live.is_empty() {
        return Err(PromptError::NoSegments);
    }
    let mut slots = slots(state, question, frames, fps, caption_cap);
    let count = number_words(slots.seen_count as u64);
    let ids = live.iter().map(u32::to_string).collect::<Vec<_>>().join("/");
    let item = format!("{{'segment_id': '{ids}', 'duration': 'xxx - xxx', 'description': 'frame of xxx'}}");
    let text = format!(
        "{}1. Divide the video into {} segments based on the intervals between the initial {count} frames.\n{SEARCH_STEP_TWO}\n```\n{{'frame_descriptions': [{item}, {item}, {item}]}}",
        search_header(&slots, &count),
        number_words(live.len() as u64),
    );
    slots.segment_ids = Some(live);
    Ok(PromptBundle {
        kind: PromptKind::Search,
        text,
        slots,
    })
}

/// Search prompt without segment structure, for runs with segment selection
/// turned off: every description targets the whole unseen range.
pub fn render_search_prompt_unscoped(
    state: &AgentState,
    question: &Question,
    frames: u32,
    fps: u32,
    caption_cap: Option<usize>,
) -> Result<PromptBundle, PromptError> {
    check(state, question)?;
    if state.len() >= frames as usize {
        return Err(PromptError::NoSegments);
    }
    let slots = slots(state, question, frames, fps, caption_cap);
    let count = number_words(slots.seen_count as u64);
    let item = "{'description': 'frame of xxx'}";
    let text = format!(
        "{}{UNSCOPED_STEPS}\n```\n{{'frame_descriptions': [{item}, {item}, {item}]}}",
        search_header(&slots, &count),
    );
    Ok(PromptBundle {
        kind: PromptKind::Search,
        text,
        slots,
    })
}

/// English cardinal for `n` ("five", "forty-two", "one hundred eighty");
/// digits from one million up.
pub fn number_words(n: u64) -> String {
    const ONES: [&str; 20] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
        "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen",
        "eighteen", "nineteen",
    ];
    const TENS: [&str; 10] = [
        "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
    ];
    fn below_thousand(n: u64) -> String {
        let mut parts = Vec::new();
        if n >= 100 {
            parts.push(format!("{} hundred", ONES[(n / 100) as usize]));
        }
        let rest = n % 100;
        if rest > 0 || n == 0 {
            parts.push(if rest < 20 {
                ONES[rest as usize].to_string()
            } else if rest.is_multiple_of(10) {
                TENS[(rest / 10) as usize].to_string()
            } else {
                format!("{}-{}", TENS[(rest / 10) as usize], ONES[(rest % 10) as usize])
            });
        }
        parts.join(" ")
    }
    match n {
        0..=999 => below_thousand(n),
        1_000..=999_999 => {
            let (hi, lo) = (n / 1000, n % 1000);
            if lo == 0 {
                format!("{} thousand", below_thousand(hi))
            } else {
                format!("{} thousand {}", below_thousand(hi), below_thousand(lo))
            }
        }
        _ => n.to_string(),
    }
}
