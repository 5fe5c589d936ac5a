// Writing a bundle to disk, loading it back and validating it.
//
// cargo run --example write_bundle -- OUT_DIR

use std::path::Path;

use frameagent::demo::dough_assets;
use frameagent::{load_assets, validate_assets, write_assets};

pub fn write_to(dir: &Path) -> anyhow::Result<usize> {
    let assets = dough_assets(16, 7);
    write_assets(&assets, dir)?;
    let back = load_assets(dir)?;
    anyhow::ensure!(back.embedding_matrix() == assets.embedding_matrix(), "embeddings changed");
    let report = validate_assets(&back);
    println!("{}: {} frames, dim {}, {} violations", dir.display(), back.frame_count(), back.dim(), report.len());
    Ok(report.len())
}

pub fn run_example() -> anyhow::Result<usize> {
    let dir = tempfile::tempdir()?;
    write_to(&dir.path().join("dough"))
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    match std::env::args().nth(1) {
        Some(out) => write_to(Path::new(&out)).map(|_| ()),
        None => run_example().map(|_| ()),
    }
}
