//! Frame-to-text backends.

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::assets::VideoAssets;
use crate::http::{HttpError, JsonClient, RetryPolicy};

#[derive(Debug, Error)]
pub enum CaptionError {
    #[error("frame {frame} is outside 1..={frames}")]
    OutOfRange { frame: u32, frames: u32 },
    #[error("no stored caption for frame {0}")]
    StoreMiss(u32),
    #[error("empty caption for frame {0}")]
    Empty(u32),
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("caption response lacks a \"caption\" string")]
    BadResponse,
}

/// One frame to describe. `window` is the half-width in frames for clip-style
/// captioners; 0 means the single frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionRequest {
    pub frame_index: u32,
    pub window: u32,
}

impl CaptionRequest {
    pub fn new(frame_index: u32, window: u32) -> Self {
        Self {
            frame_index,
            window,
        }
    }

    /// The clip span `[lo, hi]` after clamping to `1..=frames`.
    pub fn clip(&self, frames: u32) -> (u32, u32) {
        (
            self.frame_index.saturating_sub(self.window).max(1),
            self.frame_index.saturating_add(self.window).min(frames),
        )
    }

    fn check(&self, frames: u32) -> Result<(), CaptionError> {
        if self.frame_index == 0 || self.frame_index > frames {
            return Err(CaptionError::OutOfRange {
                frame: self.frame_index,
                frames,
            });
        }
        Ok(())
    }
}

pub trait CaptionBackend: Send + Sync {
    fn caption(&self, assets: &VideoAssets, request: &CaptionRequest)
        -> Result<String, CaptionError>;
}

/// Serves the precomputed captions in the bundle; `window` is ignored.
#[derive(Debug, Default, Clone, Copy)]
pub struct StoreCaptioner;

impl CaptionBackend for StoreCaptioner {
    fn caption(
        &self,
        assets: &VideoAssets,
        request: &CaptionRequest,
    ) -> Result<String, CaptionError> {
        request.check(assets.frame_count())?;
        let text = assets
            .caption(request.frame_index)
            .ok_or(CaptionError::StoreMiss(request.frame_index))?;
        if text.is_empty() {
            return Err(CaptionError::Empty(request.frame_index));
        }
        Ok(text.to_string())
    }
}

/// On-demand captioning service:
/// `POST {"video_id", "frame_index", "window"}` → `{"caption": "..."}`.
#[derive(Debug, Clone)]
pub struct HttpCaptioner {
    url: String,
    client: JsonClient,
}

impl HttpCaptioner {
    pub fn new(url: impl Into<String>, policy: RetryPolicy) -> Result<Self, CaptionError> {
        Ok(Self {
            url: url.into(),
            client: JsonClient::new(None, policy)?,
        })
    }
}

impl CaptionBackend for HttpCaptioner {
    fn caption(
        &self,
        assets: &VideoAssets,
        request: &CaptionRequest,
    ) -> Result<String, CaptionError> {
        request.check(assets.frame_count())?;
        let body = json!({
            "video_id": assets.video_id(),
            "frame_index": request.frame_index,
            "window": request.window,
        });
        let (resp, _) = self.client.post(&self.url, &body)?;
        let text = resp
            .get("caption")
            .and_then(|c| c.as_str())
            .ok_or(CaptionError::BadResponse)?;
        if text.is_empty() {
            return Err(CaptionError::Empty(request.frame_index));
        }
        Ok(text.to_string())
    }
}
