// Targeted retrieval against uniform sampling on synthetic needle videos.
//
// cargo run --example needle_bench

use std::sync::Arc;

use frameagent::bench::needle::NeedleSuite;
use frameagent::bench::{evaluate, uniform_baseline, EvalOptions, Metrics};
use frameagent::captioner::StoreCaptioner;
use frameagent::llm::LlmClient;
use frameagent::{Backends, LoopConfig};

pub fn run_example() -> anyhow::Result<(Metrics, Metrics)> {
    let suite = NeedleSuite::generate(50, 180, 32, &[5, 8], 2024);
    let backends = Backends {
        llm: LlmClient::new(Arc::new(suite.oracle())),
        captioner: Arc::new(StoreCaptioner),
        embedder: Arc::new(suite.embedder.clone()),
    };
    let config = LoopConfig::default();
    let opts = EvalOptions { workers: 4, ..EvalOptions::default() };

    let agent = evaluate(&suite.items, &suite.assets, &config, &backends, &opts)?;
    let uniform = uniform_baseline(&suite.items, &suite.assets, 8, &config, &backends, &opts)?;
    println!("agent    {}", agent.metrics.summary_line());
    println!("uniform8 {}", uniform.metrics.summary_line());
    Ok((agent.metrics, uniform.metrics))
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
