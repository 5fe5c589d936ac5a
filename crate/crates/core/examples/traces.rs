// Writing a run's trace as JSON lines, reading it back and fingerprinting it.
//
// cargo run --example traces

use std::fs;

use frameagent::RunTrace;

mod scripted_run {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/scripted_run.rs"));
}

pub fn run_example() -> anyhow::Result<String> {
    let (_, trace) = scripted_run::run_example()?;
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("trace.jsonl");
    fs::write(&path, trace.to_lines())?;

    let text = fs::read_to_string(&path)?;
    println!("{} lines, last one is the summary:", text.lines().count());
    println!("{}", text.lines().last().unwrap_or_default());

    let back = RunTrace::from_lines(&text)?;
    anyhow::ensure!(back.fingerprint() == trace.fingerprint(), "fingerprint changed on reload");
    println!("fingerprint {}", back.fingerprint());
    Ok(back.fingerprint())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
