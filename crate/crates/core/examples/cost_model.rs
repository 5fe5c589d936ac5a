// What share of run time goes to embedding frames and queries.
//
// cargo run --example cost_model

use frameagent::bench::{cost_fraction, CostParams};

pub fn run_example() -> anyhow::Result<f64> {
    let params = CostParams {
        frames: 180.0,
        selected: 8.4,
        embed_secs: 0.02,
        caption_secs: 20.0,
        round_secs: 10.0,
        rounds: 3.0,
    };
    let f = cost_fraction(&params)?;
    println!("embedding share: {:.2}%", f * 100.0);
    for secs in [0.005, 0.05, 0.5] {
        let g = cost_fraction(&CostParams { embed_secs: secs, ..params })?;
        println!("  at {secs}s per embedding: {:.2}%", g * 100.0);
    }
    Ok(f)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
