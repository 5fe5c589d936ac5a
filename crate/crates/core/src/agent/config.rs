use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{Confidence, DecodingParams};
use crate::retrieval::DEFAULT_MAX_QUERIES;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("max_rounds must be at least 1")]
    NoRounds,
    #[error("init_frames must be at least 2, got {0}")]
    TooFewInitFrames(u32),
    #[error("fps must be positive")]
    ZeroFps,
}

/// Knobs of the answer/search loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    /// Frames sampled uniformly before the first round.
    pub init_frames: u32,
    pub max_rounds: u32,
    /// Answer once self-reflection reports at least this level.
    pub confidence_threshold: Confidence,
    pub max_queries: usize,
    pub self_evaluation: bool,
    pub segment_selection: bool,
    pub decoding: DecodingParams,
    /// Re-asks after an unparsable response.
    pub parse_retries: u32,
    /// Transport retries for HTTP backends.
    pub net_retries: u32,
    pub fps: u32,
    /// Half-width passed to clip-style captioners.
    pub caption_window: u32,
    pub caption_char_cap: Option<usize>,
    /// Wall-clock timing per round. Disable for byte-identical traces.
    pub record_timing: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            init_frames: 5,
            max_rounds: 3,
            confidence_threshold: Confidence::Sufficient,
            max_queries: DEFAULT_MAX_QUERIES,
            self_evaluation: true,
            segment_selection: true,
            decoding: DecodingParams::default(),
            parse_retries: 2,
            net_retries: 3,
            fps: 1,
            caption_window: 0,
            caption_char_cap: None,
            record_timing: true,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_rounds < 1 {
            return Err(ConfigError::NoRounds);
        }
        if self.init_frames < 2 {
            return Err(ConfigError::TooFewInitFrames(self.init_frames));
        }
        if self.fps == 0 {
            return Err(ConfigError::ZeroFps);
        }
        Ok(())
    }

    /// Upper bound on frames a run can end with.
    pub fn frame_budget(&self) -> usize {
        self.init_frames as usize + (self.max_rounds as usize - 1) * self.max_queries
    }
}
