//! Iterative frame-selection agent for multiple-choice question answering
//! over long videos.
//!
//! A controller language model looks at captions of a few uniformly sampled
//! frames, predicts an answer, rates its own confidence, and, when the
//! information is insufficient, asks for specific frames. Those are found by
//! cosine similarity between a text query and precomputed frame embeddings,
//! restricted to the span between two already-seen frames, then captioned
//! and merged into the state for the next round.
//!
//! Start with [`agent::run`]; the `examples/` directory shows each piece.

pub mod agent;
pub mod assets;
pub mod bench;
pub mod captioner;
pub mod cli;
pub mod demo;
pub mod http;
pub mod llm;
pub mod retrieval;
pub mod state;

pub use agent::{run, step, Backends, LoopConfig, RunTrace};
pub use assets::{load_assets, validate_assets, write_assets, VideoAssets};
pub use llm::{Confidence, Question};
pub use state::{uniform_sample, AgentState};
