//! Segment-level frame retrieval.
//!
//! Seen frames split the video into segments; each retrieval query is
//! scoped to one segment and returns the unseen frame there whose embedding
//! has the highest cosine similarity with the query. Embeddings are stored
//! unit-norm, so cosine similarity is a dot product.

pub mod embedder;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::VideoAssets;
pub use embedder::{
    normalize, EmbedError, HashEmbedder, HttpEmbedder, TableEmbedder, TextEmbedder,
};

/// Default cap on retrieval queries per round.
pub const DEFAULT_MAX_QUERIES: usize = 5;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("seen frames must be strictly increasing and include 1 and {frames}")]
    BadSeenSet { frames: u32 },
    #[error("segment {0} has no unseen frames")]
    EmptySegment(u32),
    #[error("query has dimension {found}, assets have {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("plan references unknown segment {0}")]
    UnknownSegment(u32),
    #[error("embedding queries failed: {0}")]
    Embed(#[from] EmbedError),
}

/// Unseen frames strictly between two consecutive seen frames `lo` and `hi`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: u32,
    pub lo: u32,
    pub hi: u32,
    pub candidates: Vec<u32>,
}

impl Segment {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// One segment per consecutive pair of seen frames, ids `1..|seen|`.
/// Segments without candidates are kept; callers filter with
/// [`Segment::is_empty`].
pub fn partition_segments(seen: &[u32], frames: u32) -> Result<Vec<Segment>, RetrievalError> {
    let well_formed = seen.first() == Some(&1)
        && seen.last() == Some(&frames)
        && seen.windows(2).all(|w| w[0] < w[1]);
    if !well_formed {
        return Err(RetrievalError::BadSeenSet { frames });
    }
    Ok(seen
        .windows(2)
        .enumerate()
        .map(|(i, w)| Segment {
            id: i as u32 + 1,
            lo: w[0],
            hi: w[1],
            candidates: (w[0] + 1..w[1]).collect(),
        })
        .collect())
}

/// A single pseudo-segment spanning every unseen frame, used when segment
/// selection is disabled. Its bounds are `0` and `frames + 1`.
pub fn whole_video_segment(seen: &[u32], frames: u32) -> Segment {
    let seen: BTreeSet<u32> = seen.iter().copied().collect();
    Segment {
        id: 1,
        lo: 0,
        hi: frames + 1,
        candidates: (1..=frames).filter(|f| !seen.contains(f)).collect(),
    }
}

/// Argmax of `embedding · query` over the segment's candidates; ties go to
/// the lowest frame index.
pub fn retrieve_in_segment(
    assets: &VideoAssets,
    segment: &Segment,
    query: &[f32],
) -> Result<u32, RetrievalError> {
    if query.len() != assets.dim() {
        return Err(RetrievalError::DimensionMismatch {
            expected: assets.dim(),
            found: query.len(),
        });
    }
    let mut best: Option<(u32, f32)> = None;
    for &frame in &segment.candidates {
        let Some(row) = assets.embedding(frame) else {
            continue;
        };
        let score: f32 = row.iter().zip(query).map(|(a, b)| a * b).sum();
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((frame, score));
        }
    }
    best.map(|(frame, _)| frame)
        .ok_or(RetrievalError::EmptySegment(segment.id))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanItem {
    pub segment_id: u32,
    pub query: String,
}

/// What the controller asked to look for, one query per targeted segment.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalPlan {
    pub items: Vec<PlanItem>,
}

impl RetrievalPlan {
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Retrieved {
    pub frame: u32,
    pub segment_id: u32,
    pub query: String,
}

/// Frames newly found in one round, deduplicated, in plan order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub retrieved: Vec<Retrieved>,
}

impl Observation {
    pub fn frames(&self) -> Vec<u32> {
        self.retrieved.iter().map(|r| r.frame).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.retrieved.is_empty()
    }
}

/// Embeds every query, runs the scoped argmax per plan item, and drops
/// frames already seen or already retrieved earlier in the plan.
pub fn execute_plan(
    assets: &VideoAssets,
    plan: &RetrievalPlan,
    segments: &[Segment],
    seen: &[u32],
    embedder: &dyn TextEmbedder,
) -> Result<Observation, RetrievalError> {
    if plan.is_empty() {
        return Ok(Observation::default());
    }
    let targets = plan
        .items
        .iter()
        .map(|item| {
            segments
                .iter()
                .find(|s| s.id == item.segment_id)
                .ok_or(RetrievalError::UnknownSegment(item.segment_id))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let queries: Vec<String> = plan.items.iter().map(|i| i.query.clone()).collect();
    let vectors = embedder.embed(&queries)?;
    if vectors.len() != queries.len() {
        return Err(EmbedError::BadResponse(format!(
            "{} vectors for {} queries",
            vectors.len(),
            queries.len()
        ))
        .into());
    }

    let mut taken: BTreeSet<u32> = seen.iter().copied().collect();
    let mut retrieved = Vec::new();
    for (index, ((item, segment), raw)) in plan.items.iter().zip(targets).zip(vectors).enumerate() {
        let query = normalize(raw).ok_or(EmbedError::Degenerate { index })?;
        let frame = retrieve_in_segment(assets, segment, &query)?;
        if taken.insert(frame) {
            retrieved.push(Retrieved {
                frame,
                segment_id: item.segment_id,
                query: item.query.clone(),
            });
        }
    }
    Ok(Observation { retrieved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn basis_bundle(frames: usize, dim: usize) -> VideoAssets {
        let captions = (1..=frames).map(|i| format!("c{i}")).collect();
        let mut rows = vec![0.0; frames * dim];
        for f in 0..frames {
            rows[f * dim + f % dim] = 1.0;
        }
        VideoAssets::try_new("v", captions, rows, dim).unwrap()
    }

    #[test]
    fn partition_of_five_seen_frames() {
        let segs = partition_segments(&[1, 45, 90, 135, 180], 180).unwrap();
        let bounds: Vec<_> = segs.iter().map(|s| (s.id, s.lo, s.hi)).collect();
        assert_eq!(
            bounds,
            vec![(1, 1, 45), (2, 45, 90), (3, 90, 135), (4, 135, 180)]
        );
        assert_eq!(segs[1].candidates.first(), Some(&46));
        assert_eq!(segs[1].candidates.last(), Some(&89));
    }

    #[test]
    fn partition_edge_cases() {
        let one = partition_segments(&[1, 180], 180).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].candidates.len(), 178);

        let adj = partition_segments(&[1, 2, 180], 180).unwrap();
        assert!(adj[0].is_empty());
        assert_eq!(adj[1].candidates.len(), 177);

        assert!(partition_segments(&[2, 180], 180).is_err());
        assert!(partition_segments(&[1, 179], 180).is_err());
        assert!(partition_segments(&[1, 90, 90, 180], 180).is_err());
    }

    #[test]
    fn planted_query_wins() {
        // 90 frames, one-hot rows in 128 dims: every frame is orthogonal to every other
        let assets = basis_bundle(90, 128);
        let seg = &partition_segments(&[1, 45, 90], 90).unwrap()[1];
        let query = assets.embedding(60).unwrap().to_vec();
        assert_eq!(retrieve_in_segment(&assets, seg, &query).unwrap(), 60);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let captions = (1..=5).map(|i| format!("c{i}")).collect();
        let rows = vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let assets = VideoAssets::try_new("v", captions, rows, 2).unwrap();
        let seg = &partition_segments(&[1, 5], 5).unwrap()[0];
        assert_eq!(retrieve_in_segment(&assets, seg, &[0.0, 1.0]).unwrap(), 2);
    }

    #[test]
    fn empty_segment_and_dimension_errors() {
        let assets = basis_bundle(10, 4);
        let segs = partition_segments(&[1, 2, 10], 10).unwrap();
        assert!(matches!(
            retrieve_in_segment(&assets, &segs[0], &[1.0, 0.0, 0.0, 0.0]),
            Err(RetrievalError::EmptySegment(1))
        ));
        assert!(matches!(
            retrieve_in_segment(&assets, &segs[1], &[1.0, 0.0]),
            Err(RetrievalError::DimensionMismatch { expected: 4, found: 2 })
        ));
    }

    #[test]
    fn empty_plan_is_empty_observation() {
        let assets = basis_bundle(10, 4);
        let segs = partition_segments(&[1, 10], 10).unwrap();
        let obs = execute_plan(
            &assets,
            &RetrievalPlan::default(),
            &segs,
            &[1, 10],
            &HashEmbedder::new(4, 0),
        )
        .unwrap();
        assert!(obs.is_empty());
    }

    #[test]
    fn coinciding_retrievals_are_deduplicated() {
        let assets = basis_bundle(20, 32);
        let seen = [1, 20];
        let segs = partition_segments(&seen, 20).unwrap();
        let target = assets.embedding(7).unwrap().to_vec();
        let table: TableEmbedder = [
            ("a".to_string(), target.clone()),
            ("b".to_string(), target.iter().map(|x| x * 3.0).collect()),
        ]
        .into_iter()
        .collect();
        let plan = RetrievalPlan {
            items: vec![
                PlanItem { segment_id: 1, query: "a".into() },
                PlanItem { segment_id: 1, query: "b".into() },
            ],
        };
        let obs = execute_plan(&assets, &plan, &segs, &seen, &table).unwrap();
        assert_eq!(obs.frames(), vec![7]);
        assert_eq!(obs.retrieved[0].query, "a");
    }

    #[test]
    fn whole_video_segment_lists_all_unseen() {
        let s = whole_video_segment(&[1, 5, 10], 10);
        assert_eq!(s.candidates, vec![2, 3, 4, 6, 7, 8, 9]);
    }

    fn seen_sets() -> impl Strategy<Value = (u32, Vec<u32>)> {
        (2u32..400).prop_flat_map(|frames| {
            (
                Just(frames),
                prop::collection::btree_set(2..frames.max(3), 0..40),
            )
                .prop_map(|(frames, inner)| {
                    let mut seen: Vec<u32> = std::iter::once(1)
                        .chain(inner.into_iter().filter(|&f| f < frames))
                        .chain(std::iter::once(frames))
                        .collect();
                    seen.dedup();
                    (frames, seen)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn partition_covers_unseen_exactly_once((frames, seen) in seen_sets()) {
            let segs = partition_segments(&seen, frames).unwrap();
            prop_assert_eq!(segs.len(), seen.len() - 1);
            let mut union: Vec<u32> = segs.iter().flat_map(|s| s.candidates.iter().copied()).collect();
            let total = union.len();
            union.sort_unstable();
            union.dedup();
            prop_assert_eq!(union.len(), total, "segments overlap");
            let unseen: Vec<u32> = (1..=frames).filter(|f| !seen.contains(f)).collect();
            prop_assert_eq!(union, unseen);
            prop_assert!(segs.windows(2).all(|w| w[0].lo < w[1].lo));
        }
    }
}
