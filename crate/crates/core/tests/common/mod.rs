#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use frameagent::captioner::StoreCaptioner;
use frameagent::llm::{ChatBackend, LlmClient, ScriptedMock};
use frameagent::retrieval::HashEmbedder;
use frameagent::Backends;

/// Dimension and seed of the checked-in dough bundle (`demo::dough_assets`).
pub const DIM: usize = 16;
pub const SEED: u64 = 7;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn script(name: &str) -> ScriptedMock {
    ScriptedMock::from_file(fixture(name)).expect("fixture script parses")
}

pub fn backends(chat: Arc<dyn ChatBackend>) -> Backends {
    Backends {
        llm: LlmClient::new(chat),
        captioner: Arc::new(StoreCaptioner),
        embedder: Arc::new(HashEmbedder::new(DIM, 0)),
    }
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_frameagent")
}
