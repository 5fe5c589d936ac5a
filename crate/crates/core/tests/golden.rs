//! Rendered prompts must match the reference transcriptions in
//! `tests/golden/` byte for byte, modulo line-ending style and trailing
//! newlines.

use frameagent::demo::{dough_full_state, dough_initial_state, dough_question, DOUGH_FRAMES, DOUGH_PREDICT_RESPONSE};
use frameagent::llm::{render_predict_prompt, render_reflect_prompt, render_search_prompt};
use frameagent::retrieval::partition_segments;

fn normalize(text: &str) -> String {
    text.replace("\r\n", "\n").trim_end_matches('\n').to_string()
}

fn golden(name: &str) -> String {
    let path = format!("{}/tests/golden/{name}.txt", env!("CARGO_MANIFEST_DIR"));
    normalize(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}")))
}

fn assert_same(rendered: &str, expected: &str) {
    let rendered = normalize(rendered);
    if rendered != expected {
        let line = rendered
            .lines()
            .zip(expected.lines())
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| rendered.lines().count().min(expected.lines().count()));
        panic!(
            "first difference at line {}:\n  rendered: {:?}\n  expected: {:?}",
            line + 1,
            rendered.lines().nth(line),
            expected.lines().nth(line)
        );
    }
}

#[test]
fn predict_prompt_matches_golden() {
    let p = render_predict_prompt(&dough_full_state(), &dough_question(), DOUGH_FRAMES, 1, None).unwrap();
    assert_same(&p.text, &golden("predict"));
}

#[test]
fn reflect_prompt_matches_golden() {
    let p = render_reflect_prompt(
        &dough_full_state(),
        &dough_question(),
        DOUGH_PREDICT_RESPONSE,
        DOUGH_FRAMES,
        1,
        None,
    )
    .unwrap();
    assert_same(&p.text, &golden("reflect"));
}

#[test]
fn search_prompt_matches_golden() {
    let state = dough_initial_state();
    let segments = partition_segments(&state.seen_vec(), DOUGH_FRAMES).unwrap();
    let p = render_search_prompt(&state, &dough_question(), &segments, DOUGH_FRAMES, 1, None).unwrap();
    assert_same(&p.text, &golden("search"));
}

#[test]
fn fixture_response_parses_to_option_four() {
    let (answer, rationale) = frameagent::llm::parse_answer(DOUGH_PREDICT_RESPONSE, 5).unwrap();
    assert_eq!(answer, 4);
    assert!(rationale.starts_with("Based on the sequence of sampled frames provided"));
    assert!(rationale.ends_with("Now to provide the answer in the requested JSON format:"));
}
