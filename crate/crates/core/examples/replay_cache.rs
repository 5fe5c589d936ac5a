// Recording controller responses once and replaying them with no backend.
//
// cargo run --example replay_cache

use std::sync::Arc;

use frameagent::captioner::StoreCaptioner;
use frameagent::demo::{dough_assets, dough_question};
use frameagent::llm::{LlmClient, ReplayCache, Unconfigured};
use frameagent::retrieval::HashEmbedder;
use frameagent::{run, Backends, LoopConfig};

mod scripted_run {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/scripted_run.rs"));
}

pub fn run_example() -> anyhow::Result<(u64, u64)> {
    let dir = tempfile::tempdir()?;
    let assets = dough_assets(16, 7);
    let config = LoopConfig { record_timing: false, ..LoopConfig::default() };
    let backends = |llm: LlmClient| Backends {
        llm,
        captioner: Arc::new(StoreCaptioner),
        embedder: Arc::new(HashEmbedder::new(16, 0)),
    };

    let recording = LlmClient::new(Arc::new(scripted_run::script())).with_cache(ReplayCache::open(dir.path())?);
    let first = backends(recording.clone());
    let (a, t1) = run(&dough_question(), &assets, &config, &first)?;

    // Nothing behind this client can answer; every call must hit the cache.
    let replay = LlmClient::new(Arc::new(Unconfigured)).with_cache(ReplayCache::open(dir.path())?);
    let second = backends(replay.clone());
    let (b, t2) = run(&dough_question(), &assets, &config, &second)?;

    // Exchanges differ only in their `cached` flag.
    let seen = |t: &frameagent::RunTrace| t.rounds.last().map(|r| r.seen()).unwrap_or_default();
    anyhow::ensure!(a == b && seen(&t1) == seen(&t2), "replay diverged");
    println!(
        "recorded with {} backend calls, replayed with {}",
        recording.backend_calls(),
        replay.backend_calls()
    );
    Ok((recording.backend_calls(), replay.backend_calls()))
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
