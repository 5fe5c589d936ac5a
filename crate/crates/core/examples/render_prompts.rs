// The three controller prompts rendered for the dough-rolling fixture.
//
// cargo run --example render_prompts

use frameagent::demo::{dough_full_state, dough_initial_state, dough_question, DOUGH_FRAMES, DOUGH_PREDICT_RESPONSE};
use frameagent::llm::{render_predict_prompt, render_reflect_prompt, render_search_prompt};
use frameagent::retrieval::partition_segments;

pub fn run_example() -> anyhow::Result<[String; 3]> {
    let question = dough_question();
    let full = dough_full_state();
    let predict = render_predict_prompt(&full, &question, DOUGH_FRAMES, 1, None)?;
    let reflect = render_reflect_prompt(&full, &question, DOUGH_PREDICT_RESPONSE, DOUGH_FRAMES, 1, None)?;

    let initial = dough_initial_state();
    let segments = partition_segments(&initial.seen_vec(), DOUGH_FRAMES)?;
    let search = render_search_prompt(&initial, &question, &segments, DOUGH_FRAMES, 1, None)?;

    for (name, p) in [("predict", &predict), ("reflect", &reflect), ("search", &search)] {
        println!("----- {name} -----\n{}\n", p.text);
    }
    Ok([predict.text, reflect.text, search.text])
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
