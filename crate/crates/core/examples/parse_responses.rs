// Pulling answers, confidence levels and search plans out of free-form
// controller output.
//
// cargo run --example parse_responses

use frameagent::llm::{parse_answer, parse_confidence, parse_plan};
use frameagent::retrieval::partition_segments;
use frameagent::Confidence;

pub fn run_example() -> anyhow::Result<(usize, Confidence, usize)> {
    let (answer, rationale) = parse_answer(
        "Frame 28 shows the roller, so the order is table, roller, tray.\n```\n{'final_answer': '4'}\n```",
        5,
    )?;
    println!("answer {answer}, rationale {rationale:?}");

    // Typographic quotes and a trailing comma are accepted.
    let confidence = parse_confidence("{‘confidence’: ‘2’,}")?;
    println!("confidence {confidence:?}");

    let segments = partition_segments(&[1, 45, 90, 135, 180], 180)?;
    let plan = parse_plan(
        r#"{"frame_descriptions": [
            {"segment_id": "1", "duration": "xxx - xxx", "description": "dough in the roller"},
            {"segment_id": "9", "duration": "xxx - xxx", "description": "no such segment"},
            {"segment_id": "4", "duration": "xxx - xxx", "description": "placing on the tray"},
        ]}"#,
        &segments,
        5,
    )?;
    for item in &plan.items {
        println!("segment {}: {}", item.segment_id, item.query);
    }

    if let Err(e) = parse_answer("I am not sure.", 5) {
        println!("unparsable: {e}");
    }
    Ok((answer, confidence, plan.len()))
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
