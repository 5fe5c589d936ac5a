//! A worked fixture: a 180-frame egocentric cooking clip (captions for nine
//! frames, a five-option ordering question, and one chain-of-thought
//! response), plus a synthetic bundle around it for offline runs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assets::VideoAssets;
use crate::llm::Question;
use crate::retrieval::normalize;
use crate::state::AgentState;

pub const DOUGH_FRAMES: u32 = 180;

/// Captions of every frame the fixture ever shows.
pub const DOUGH_CAPTIONS: [(u32, &str); 9] = [
    (1, "#C C rolls the dough on the table with both hands."),
    (28, "#C C puts the dough in the dough roller"),
    (45, "#C C walks to the doughs on the work table."),
    (76, "#C C picks dough from the baking tray"),
    (90, "#C C picks up dough"),
    (111, "#C C picks dough from the tray of doughs with both hands. "),
    (135, "#C C throws the dough on the dough roller"),
    (171, "#C C places the dough on the baking tray"),
    (180, "#C C rolls the dough on the baking table with his hands."),
];

/// Frames added by the fixture's single search round.
pub const DOUGH_RETRIEVED: [u32; 4] = [28, 76, 111, 171];

pub fn dough_question() -> Question {
    Question::new(
        "How would you briefly describe the sequential order of the process that c performed on the dough, from initial handling to final placement on the tray?",
        [
            "Initially, c first carefully rolled the dough on the flour, then smoothly rolled it on the table, and finally, gently placed it in the awaiting tray.",
            "C first placed the dough in the tray, then rolled it on the table, and finally rolled it on the flour.",
            "Initially, c carefully rolled the dough on the table, then skillfully placed it in the tray, and ultimately, gently rolled it on the flour.",
            "Initially, c first carefully placed the dough in the tray, then gently rolled it on the flour, and ultimately smoothly rolled it on the table.",
            "C first rolled the dough on the table, then rolled it on the flour, and finally placed it in the tray.",
        ],
    )
}

/// A complete predict response over the nine-frame state, ending in
/// `{'final_answer': '4'}`.
pub const DOUGH_PREDICT_RESPONSE: &str = r#"Based on the sequence of sampled frames provided, the following sequential order of the process can be described:

- C rolls the dough on the table with both hands. (frame 1 & frame 180)
- C puts the dough in the dough roller. (frame 28 & frame 135)
- C walks to the doughs on the work table. (frame 45, context not clear enough to make this a major step)
- C picks dough from the baking tray. (frame 76)
- C picks up dough. (frame 90, likely a continuation of picking it from the tray based on the next frame)
- C picks dough from the tray of doughs with both hands. (frame 111, this confirms the action started at frame 76)
- C places the dough on the baking tray. (frame 171)

From the above sequence, the most accurate description is that C first rolls the dough on the table, then puts it through the dough roller, and finally places it on the baking tray. Thus, the correct sequential order, represented by the best answer, should be:

4. C first rolled the dough on the table, then rolled it on the flour, and finally placed it in the tray.

Now to provide the answer in the requested JSON format:

```
{'final_answer': '4'}
```"#;

fn state_of(frames: &[u32]) -> AgentState {
    let captions: BTreeMap<u32, String> = DOUGH_CAPTIONS
        .iter()
        .filter(|(f, _)| frames.contains(f))
        .map(|&(f, c)| (f, c.to_string()))
        .collect();
    AgentState::from_captions(captions)
}

/// The five uniformly sampled frames of round 1.
pub fn dough_initial_state() -> AgentState {
    state_of(&[1, 45, 90, 135, 180])
}

/// All nine frames, after one search round.
pub fn dough_full_state() -> AgentState {
    let mut s = state_of(&DOUGH_CAPTIONS.map(|(f, _)| f));
    s.round = 2;
    s
}

/// Full 180-frame bundle: fixture captions where known, generic ones
/// elsewhere, and seeded random unit embeddings of dimension `dim`.
pub fn dough_assets(dim: usize, seed: u64) -> VideoAssets {
    let known: BTreeMap<u32, &str> = DOUGH_CAPTIONS.iter().copied().collect();
    let captions = (1..=DOUGH_FRAMES)
        .map(|f| match known.get(&f) {
            Some(c) => c.to_string(),
            None => format!("#C C works the dough at the table (second {f})"),
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(DOUGH_FRAMES as usize * dim);
    for _ in 0..DOUGH_FRAMES {
        let raw: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        rows.extend(normalize(raw).expect("random draw is non-zero"));
    }
    VideoAssets::try_new("dough", captions, rows, dim).expect("fixture bundle is valid")
}
