//! Synthetic needle-in-a-video suite.
//!
//! Each bundle has exactly one frame whose caption carries the answer. The
//! oracle controller answers correctly iff that caption is in its prompt and
//! asks for the needle's segment otherwise; the query embedding is the
//! needle frame's own embedding. Targeted retrieval finds the needle in one
//! search; uniform sampling that misses the needle's position cannot.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::QaItem;
use crate::assets::{MemoryAssets, VideoAssets};
use crate::llm::{ChatBackend, ChatRequest, Completion, LlmError, PromptKind};
use crate::retrieval::{normalize, TableEmbedder};
use crate::state::uniform_sample;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeedleCase {
    pub item: usize,
    pub video_id: String,
    pub needle: u32,
    pub answer: usize,
    pub query: String,
}

/// Bundles, questions, oracle controller and query table for one suite.
#[derive(Debug, Clone)]
pub struct NeedleSuite {
    pub assets: MemoryAssets,
    pub items: Vec<QaItem>,
    pub cases: Vec<NeedleCase>,
    pub embedder: TableEmbedder,
}

pub const OPTIONS: usize = 5;

fn marker(item: usize) -> String {
    format!("[item {item}]")
}

fn needle_caption(item: usize, answer: usize) -> String {
    format!("NEEDLE-{item}: a note on the fridge reads option {answer}")
}

impl NeedleSuite {
    /// `count` bundles of `frames` frames and `dim`-dimensional embeddings.
    /// Needles avoid every frame in `avoid_grids` (uniform samples of the
    /// given sizes).
    pub fn generate(count: usize, frames: u32, dim: usize, avoid_grids: &[u32], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocked: BTreeSet<u32> = avoid_grids
            .iter()
            .filter_map(|&n| uniform_sample(frames, n).ok())
            .flatten()
            .collect();
        let open: Vec<u32> = (1..=frames).filter(|f| !blocked.contains(f)).collect();
        assert!(!open.is_empty(), "every frame is on an avoided grid");

        let mut assets = MemoryAssets::new();
        let mut items = Vec::new();
        let mut cases = Vec::new();
        let mut embedder = TableEmbedder::new();
        for item in 0..count {
            let video_id = format!("needle-{item:03}");
            let needle = open[rng.random_range(0..open.len())];
            let answer = rng.random_range(0..OPTIONS);
            let captions: Vec<String> = (1..=frames)
                .map(|f| {
                    if f == needle {
                        needle_caption(item, answer)
                    } else {
                        format!("#C C moves around the kitchen (shot {f})")
                    }
                })
                .collect();
            let mut rows = Vec::with_capacity(frames as usize * dim);
            for _ in 0..frames {
                let raw: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
                rows.extend(normalize(raw).expect("random draw is non-zero"));
            }
            let bundle = VideoAssets::try_new(video_id.clone(), captions, rows, dim)
                .expect("generated bundle is valid");
            let query = format!("a frame showing the note for item {item}");
            embedder.insert(query.clone(), bundle.embedding(needle).expect("needle row").to_vec());
            assets.insert(bundle);
            items.push(QaItem {
                video_id: video_id.clone(),
                question: format!("{} Which option does the note on the fridge name?", marker(item)),
                options: (0..OPTIONS).map(|i| format!("option {i}")).collect(),
                answer_index: Some(answer),
                qtype: Some("descriptive".into()),
            });
            cases.push(NeedleCase { item, video_id, needle, answer, query });
        }
        Self { assets, items, cases, embedder }
    }

    pub fn oracle(&self) -> NeedleOracle {
        NeedleOracle {
            cases: self.cases.iter().map(|c| (marker(c.item), c.clone())).collect(),
        }
    }
}

/// Controller that knows where every needle is but only answers from what
/// its prompt shows.
#[derive(Debug, Clone)]
pub struct NeedleOracle {
    cases: HashMap<String, NeedleCase>,
}

impl NeedleOracle {
    fn case_for(&self, prompt: &str) -> Option<&NeedleCase> {
        let start = prompt.find("[item ")?;
        let end = start + prompt[start..].find(']')?;
        self.cases.get(&prompt[start..=end])
    }
}

/// Frame indices named in a rendered caption map.
fn seen_frames(prompt: &str) -> Vec<u32> {
    prompt
        .match_indices("'frame ")
        .filter_map(|(i, m)| {
            let rest = &prompt[i + m.len()..];
            let end = rest.find('\'')?;
            rest[..end].parse().ok()
        })
        .collect()
}

impl ChatBackend for NeedleOracle {
    fn complete(&self, request: &ChatRequest) -> Result<Completion, LlmError> {
        let prompt = request
            .messages
            .last()
            .map(|m| m.content.as_str())
            .unwrap_or_default();
        let case = self
            .case_for(prompt)
            .ok_or_else(|| LlmError::MockMiss(format!("{}:{}", request.kind, request.round)))?;
        let sees_needle = prompt.contains(&format!("NEEDLE-{}:", case.item));
        let text = match request.kind {
            PromptKind::Predict if sees_needle => format!(
                "The note names option {a}.\n{{'final_answer': '{a}'}}",
                a = case.answer
            ),
            PromptKind::Predict => format!(
                "Nothing in view names an option; guessing.\n{{'final_answer': '{}'}}",
                (case.answer + 1) % OPTIONS
            ),
            PromptKind::Reflect => {
                format!("{{'confidence': '{}'}}", if sees_needle { 3 } else { 1 })
            }
            PromptKind::Search => {
                let mut seen = seen_frames(prompt);
                seen.sort_unstable();
                seen.dedup();
                let segment = seen.iter().filter(|&&f| f < case.needle).count();
                format!(
                    "{{'frame_descriptions': [{{'segment_id': '{segment}', 'duration': 'xxx - xxx', 'description': '{}'}}]}}",
                    case.query
                )
            }
        };
        Ok(Completion { text, attempts: 1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needles_avoid_grids() {
        let suite = NeedleSuite::generate(20, 180, 16, &[5, 8], 1);
        let grid: BTreeSet<u32> = [5, 8].iter().flat_map(|&n| uniform_sample(180, n).unwrap()).collect();
        assert!(suite.cases.iter().all(|c| !grid.contains(&c.needle)));
        assert_eq!(suite.items.len(), 20);
    }

    #[test]
    fn frame_extraction_from_map() {
        assert_eq!(seen_frames("{'frame 1': 'a', 'frame 45': 'b'}"), vec![1, 45]);
    }
}
