//! The agent's knowledge between rounds: seen frames, their captions, and
//! the latest prediction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::VideoAssets;
use crate::captioner::{CaptionBackend, CaptionError, CaptionRequest};

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("cannot sample {requested} frames from a {frames}-frame video (need 2 <= N <= L)")]
    BadSampleCount { frames: u32, requested: u32 },
    #[error("frame {frame} is outside 1..={frames}")]
    OutOfRange { frame: u32, frames: u32 },
    #[error("captioning frame {frame} failed: {reason}")]
    Caption { frame: u32, reason: String },
}

/// Endpoint-inclusive floor-linspace over `1..=frames`: element `k` is
/// `floor(1 + (frames - 1) * k / (count - 1))`.
pub fn uniform_sample(frames: u32, count: u32) -> Result<Vec<u32>, StateError> {
    if count < 2 || count > frames {
        return Err(StateError::BadSampleCount {
            frames,
            requested: count,
        });
    }
    let span = u64::from(frames - 1);
    let steps = u64::from(count - 1);
    Ok((0..u64::from(count))
        .map(|k| 1 + (span * k / steps) as u32)
        .collect())
}

/// Seen frames with their captions (kept sorted by frame index) plus the
/// prediction carried between rounds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    captions: BTreeMap<u32, String>,
    pub last_prediction: Option<usize>,
    pub last_rationale: Option<String>,
    pub round: u32,
}

impl AgentState {
    pub fn from_captions(captions: BTreeMap<u32, String>) -> Self {
        Self {
            captions,
            last_prediction: None,
            last_rationale: None,
            round: 1,
        }
    }

    /// Seen frame indices, strictly increasing.
    pub fn seen(&self) -> impl Iterator<Item = u32> + '_ {
        self.captions.keys().copied()
    }

    pub fn seen_vec(&self) -> Vec<u32> {
        self.seen().collect()
    }

    pub fn captions(&self) -> &BTreeMap<u32, String> {
        &self.captions
    }

    pub fn contains(&self, frame: u32) -> bool {
        self.captions.contains_key(&frame)
    }

    pub fn len(&self) -> usize {
        self.captions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.captions.is_empty()
    }

    /// Adds new captions; a frame that is already seen keeps its old caption.
    /// Rejects indices outside `1..=frames` without changing anything.
    pub fn merge(&self, new: &BTreeMap<u32, String>, frames: u32) -> Result<Self, StateError> {
        if let Some(&frame) = new.keys().find(|&&f| f == 0 || f > frames) {
            return Err(StateError::OutOfRange { frame, frames });
        }
        let mut next = self.clone();
        for (&frame, caption) in new {
            next.captions
                .entry(frame)
                .or_insert_with(|| caption.clone());
        }
        Ok(next)
    }

    /// `{'frame 1': '...', 'frame 45': '...'}` in ascending frame order.
    pub fn render_caption_map(&self) -> String {
        self.render_caption_map_capped(None)
    }

    /// Like [`render_caption_map`](Self::render_caption_map), truncating each
    /// caption to at most `max_chars` characters when a cap is given.
    pub fn render_caption_map_capped(&self, max_chars: Option<usize>) -> String {
        let body = self
            .captions
            .iter()
            .map(|(frame, caption)| {
                let text: String = match max_chars {
                    Some(cap) => caption.chars().take(cap).collect(),
                    None => caption.clone(),
                };
                format!("'frame {frame}': '{}'", text.replace('\'', "''"))
            })
            .collect::<Vec<_>>()
            .join(", ");
        format!("{{{body}}}")
    }
}

/// Samples `count` frames uniformly and captions them.
pub fn init_state(
    assets: &VideoAssets,
    count: u32,
    captioner: &dyn CaptionBackend,
    window: u32,
) -> Result<AgentState, StateError> {
    let frames = assets.frame_count();
    let mut captions = BTreeMap::new();
    for frame in uniform_sample(frames, count)? {
        let text = captioner
            .caption(assets, &CaptionRequest::new(frame, window))
            .map_err(|e: CaptionError| StateError::Caption {
                frame,
                reason: e.to_string(),
            })?;
        captions.insert(frame, text);
    }
    Ok(AgentState::from_captions(captions))
}
