// A complete two-round run against a scripted controller: low confidence in
// round 1, one retrieved frame, then a confident answer.
//
// cargo run --example scripted_run

use std::sync::Arc;

use frameagent::captioner::StoreCaptioner;
use frameagent::demo::{dough_assets, dough_question};
use frameagent::llm::{LlmClient, ScriptedMock};
use frameagent::retrieval::HashEmbedder;
use frameagent::{run, Backends, LoopConfig, RunTrace};

pub fn script() -> ScriptedMock {
    ScriptedMock::new()
        .with("predict:1", "Not enough to order the steps.\n{'final_answer': '2'}")
        .with("reflect:1", "{'confidence': '1'}")
        .with(
            "search:1",
            "{'frame_descriptions': [{'segment_id': '1', 'duration': 'xxx - xxx', 'description': 'dough in the roller'}]}",
        )
        .with("predict:2", "{'final_answer': '2'}")
        .with("reflect:2", "{'confidence': '3'}")
}

pub fn run_example() -> anyhow::Result<(usize, RunTrace)> {
    let assets = dough_assets(16, 7);
    let backends = Backends {
        llm: LlmClient::new(Arc::new(script())),
        captioner: Arc::new(StoreCaptioner),
        embedder: Arc::new(HashEmbedder::new(16, 0)),
    };
    let (answer, trace) = run(&dough_question(), &assets, &LoopConfig::default(), &backends)?;
    print!("{}", trace.pretty(false));
    println!("answer {answer} after {} rounds, {} frames", trace.rounds.len(), trace.frames_seen);
    Ok((answer, trace))
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
