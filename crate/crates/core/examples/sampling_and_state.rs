// Uniform initial sampling and merging newly captioned frames into the state.
//
// cargo run --example sampling_and_state

use std::collections::BTreeMap;

use frameagent::{uniform_sample, AgentState};

pub fn run_example() -> anyhow::Result<AgentState> {
    let frames = uniform_sample(180, 5)?;
    println!("initial frames: {frames:?}");

    let initial: BTreeMap<u32, String> = frames
        .iter()
        .map(|&f| (f, format!("caption of frame {f}")))
        .collect();
    let mut state = AgentState::from_captions(initial);

    // Frame 90 is already known, so its original caption is kept.
    let retrieved: BTreeMap<u32, String> = [(28, "the dough goes into the roller"), (90, "ignored")]
        .into_iter()
        .map(|(f, c)| (f, c.to_string()))
        .collect();
    state = state.merge(&retrieved, 180)?;

    println!("seen: {:?}", state.seen_vec());
    println!("{}", state.render_caption_map());
    Ok(state)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
