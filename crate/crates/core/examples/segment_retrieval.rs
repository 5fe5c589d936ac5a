// Splitting a video at the seen frames and retrieving the best-matching
// unseen frame inside each requested segment.
//
// cargo run --example segment_retrieval

use frameagent::demo::dough_assets;
use frameagent::retrieval::{execute_plan, partition_segments, PlanItem, RetrievalPlan, TableEmbedder};

pub fn run_example() -> anyhow::Result<Vec<u32>> {
    let assets = dough_assets(16, 7);
    let seen = [1, 45, 90, 135, 180];
    let segments = partition_segments(&seen, assets.frame_count())?;
    for s in &segments {
        println!("segment {}: frames {}..{} ({} unseen)", s.id, s.lo, s.hi, s.candidates.len());
    }

    // A lookup table standing in for a text encoder: each query maps to the
    // embedding of the frame we want it to find.
    let wanted = [(1, 28, "dough in the roller"), (2, 76, "picking from the tray"), (3, 111, "both hands on the tray"), (4, 171, "placing on the tray")];
    let embedder: TableEmbedder = wanted
        .iter()
        .map(|&(_, frame, q)| (q.to_string(), assets.embedding(frame).unwrap().to_vec()))
        .collect();
    let plan = RetrievalPlan {
        items: wanted
            .iter()
            .map(|&(segment_id, _, q)| PlanItem { segment_id, query: q.to_string() })
            .collect(),
    };

    let observation = execute_plan(&assets, &plan, &segments, &seen, &embedder)?;
    for r in &observation.retrieved {
        println!("segment {} {:?} -> frame {}", r.segment_id, r.query, r.frame);
    }
    Ok(observation.frames())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
