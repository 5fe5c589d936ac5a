//! Share of wall-clock time spent on contrastive feature extraction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("parameter {0} is negative or not finite")]
    BadParameter(&'static str),
    #[error("total cost is zero")]
    ZeroTotal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Frames in the video, all embedded once.
    pub frames: f64,
    /// Mean frames the agent captions.
    pub selected: f64,
    /// Seconds to embed one image or one text query.
    pub embed_secs: f64,
    /// Seconds to caption one frame.
    pub caption_secs: f64,
    /// Seconds per controller round.
    pub round_secs: f64,
    pub rounds: f64,
}

/// `(N·x + n·x) / (N·x + n·x + n·y + t·z)`.
pub fn cost_fraction(p: &CostParams) -> Result<f64, CostError> {
    for (name, v) in [
        ("frames", p.frames),
        ("selected", p.selected),
        ("embed_secs", p.embed_secs),
        ("caption_secs", p.caption_secs),
        ("round_secs", p.round_secs),
        ("rounds", p.rounds),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(CostError::BadParameter(name));
        }
    }
    let embedding = (p.frames + p.selected) * p.embed_secs;
    let total = embedding + p.selected * p.caption_secs + p.rounds * p.round_secs;
    if total == 0.0 {
        return Err(CostError::ZeroTotal);
    }
    Ok(embedding / total)
}
