//! Benchmark harness: run the agent over a dataset, aggregate accuracy and
//! frame usage, sweep ablation axes, and compare with uniform sampling.

pub mod cost;
pub mod dataset;
pub mod needle;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cost::{cost_fraction, CostError, CostParams};
pub use dataset::{load_dataset, parse_dataset, DatasetError, QaItem};

use crate::agent::{run, Backends, LoopConfig};
use crate::assets::AssetSource;
use crate::llm::{parse_answer, render_predict_prompt, PromptKind};
use crate::state::init_state;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("item {index} ({video_id}): {reason}")]
    Item {
        index: usize,
        video_id: String,
        reason: String,
    },
    #[error("budget must be at least 2, got {0}")]
    BadBudget(u32),
    #[error("no values to sweep")]
    NoSweepValues,
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("writing {path}: {reason}")]
    Output { path: String, reason: String },
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Worker threads; 0 means one per core.
    pub workers: usize,
    /// Abort on the first item failure instead of skipping it.
    pub fail_fast: bool,
    /// Write `<index>_<video_id>.jsonl` traces here.
    pub trace_dir: Option<PathBuf>,
    /// Replaces the loop config recorded in written traces.
    pub trace_config: Option<serde_json::Value>,
}

/// Per-question result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub index: usize,
    pub video_id: String,
    pub qtype: Option<String>,
    pub answer: usize,
    pub correct: Option<bool>,
    pub frames: usize,
    pub rounds: usize,
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub index: usize,
    pub video_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QtypeStats {
    pub labeled: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub items: usize,
    pub evaluated: usize,
    pub skipped: usize,
    pub labeled: usize,
    pub correct: usize,
    /// Over evaluated items that carry an answer label; 0 when none do.
    pub accuracy: f64,
    pub per_qtype: BTreeMap<String, QtypeStats>,
    pub mean_frames: f64,
    pub min_frames: usize,
    pub max_frames: usize,
    pub mean_rounds: f64,
    pub degraded: usize,
}

impl Metrics {
    pub fn from_outcomes(outcomes: &[ItemOutcome], skipped: usize) -> Self {
        let evaluated = outcomes.len();
        let labeled: Vec<&ItemOutcome> = outcomes.iter().filter(|o| o.correct.is_some()).collect();
        let correct = labeled.iter().filter(|o| o.correct == Some(true)).count();
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };

        let mut per_qtype: BTreeMap<String, QtypeStats> = BTreeMap::new();
        for o in &labeled {
            if let Some(q) = &o.qtype {
                let s = per_qtype.entry(q.clone()).or_default();
                s.labeled += 1;
                s.correct += usize::from(o.correct == Some(true));
            }
        }
        for s in per_qtype.values_mut() {
            s.accuracy = ratio(s.correct, s.labeled);
        }

        let frames: Vec<usize> = outcomes.iter().map(|o| o.frames).collect();
        Metrics {
            items: evaluated + skipped,
            evaluated,
            skipped,
            labeled: labeled.len(),
            correct,
            accuracy: ratio(correct, labeled.len()),
            per_qtype,
            mean_frames: ratio(frames.iter().sum(), evaluated),
            min_frames: frames.iter().copied().min().unwrap_or(0),
            max_frames: frames.iter().copied().max().unwrap_or(0),
            mean_rounds: ratio(outcomes.iter().map(|o| o.rounds).sum(), evaluated),
            degraded: outcomes.iter().filter(|o| o.degraded).count(),
        }
    }

    /// `acc=0.800 frames=6.0 rounds=2.0`
    pub fn summary_line(&self) -> String {
        format!(
            "acc={:.3} frames={:.1} rounds={:.1}",
            self.accuracy, self.mean_frames, self.mean_rounds
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub outcomes: Vec<ItemOutcome>,
    pub skipped: Vec<Skipped>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, BenchError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))
}

/// Runs `job` on every item in a bounded pool and folds the results, in
/// item order, into an [`Evaluation`].
fn collect(
    items: &[QaItem],
    opts: &EvalOptions,
    job: impl Fn(usize, &QaItem) -> Result<ItemOutcome, String> + Sync,
) -> Result<Evaluation, BenchError> {
    if items.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    let results: Vec<Result<ItemOutcome, String>> =
        pool(opts.workers)?.install(|| items.par_iter().enumerate().map(|(i, item)| job(i, item)).collect());
    let mut eval = Evaluation::default();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => eval.outcomes.push(o),
            Err(reason) => {
                let video_id = items[index].video_id.clone();
                if opts.fail_fast {
                    return Err(BenchError::Item { index, video_id, reason });
                }
                eval.skipped.push(Skipped { index, video_id, reason });
            }
        }
    }
    eval.metrics = Metrics::from_outcomes(&eval.outcomes, eval.skipped.len());
    Ok(eval)
}

/// Runs the agent on every item.
pub fn evaluate(
    items: &[QaItem],
    assets: &dyn AssetSource,
    config: &LoopConfig,
    backends: &Backends,
    opts: &EvalOptions,
) -> Result<Evaluation, BenchError> {
    if let Some(dir) = &opts.trace_dir {
        fs::create_dir_all(dir).map_err(|e| BenchError::Output {
            path: dir.display().to_string(),
            reason: e.to_string(),
        })?;
    }
    collect(items, opts, |index, item| {
        let bundle = assets.get(&item.video_id).map_err(|e| e.to_string())?;
        let (answer, mut trace) = run(&item.as_question(), &bundle, config, backends).map_err(|e| e.to_string())?;
        if let Some(dir) = &opts.trace_dir {
            if let Some(c) = &opts.trace_config {
                trace.config = c.clone();
            }
            let path = dir.join(format!("{index}_{}.jsonl", item.video_id));
            fs::write(&path, trace.to_lines()).map_err(|e| format!("{}: {e}", path.display()))?;
        }
        Ok(ItemOutcome {
            index,
            video_id: item.video_id.clone(),
            qtype: item.qtype.clone(),
            answer,
            correct: item.answer_index.map(|a| a == answer),
            frames: trace.frames_seen,
            rounds: trace.rounds.len(),
            degraded: trace.degraded,
        })
    })
}

/// One predict call over `budget` uniformly sampled captions, with no
/// reflection or retrieval. Budgets above a video's length use every frame.
pub fn uniform_baseline(
    items: &[QaItem],
    assets: &dyn AssetSource,
    budget: u32,
    config: &LoopConfig,
    backends: &Backends,
    opts: &EvalOptions,
) -> Result<Evaluation, BenchError> {
    if budget < 2 {
        return Err(BenchError::BadBudget(budget));
    }
    let llm = backends.llm.clone().with_params(config.decoding.clone());
    collect(items, opts, |index, item| {
        let bundle = assets.get(&item.video_id).map_err(|e| e.to_string())?;
        let frames = bundle.frame_count();
        let state = init_state(&bundle, budget.min(frames), backends.captioner.as_ref(), config.caption_window)
            .map_err(|e| e.to_string())?;
        let question = item.as_question();
        let prompt = render_predict_prompt(&state, &question, frames, config.fps, config.caption_char_cap)
            .map_err(|e| e.to_string())?;
        let options = question.options.len();
        let asked = llm
            .ask(PromptKind::Predict, 1, &prompt.text, config.parse_retries, |raw| parse_answer(raw, options))
            .map_err(|e| e.to_string())?;
        let degraded = asked.value.is_none();
        let answer = asked.value.map_or(0, |(a, _)| a);
        Ok(ItemOutcome {
            index,
            video_id: item.video_id.clone(),
            qtype: item.qtype.clone(),
            answer,
            correct: item.answer_index.map(|a| a == answer),
            frames: state.len(),
            rounds: 1,
            degraded,
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Agent with `max_rounds` set to each value.
    Rounds,
    /// Agent with `init_frames` set to each value.
    InitFrames,
    /// Uniform-sampling baseline with each frame budget.
    Budget,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Rounds => "rounds",
            SweepAxis::InitFrames => "init_frames",
            SweepAxis::Budget => "budget",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rounds" => Ok(Self::Rounds),
            "init_frames" | "init-frames" => Ok(Self::InitFrames),
            "budget" => Ok(Self::Budget),
            other => Err(format!("unknown axis {other:?} (rounds|init_frames|budget)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: u32,
    pub metrics: Metrics,
}

pub fn sweep(
    items: &[QaItem],
    assets: &dyn AssetSource,
    axis: SweepAxis,
    values: &[u32],
    config: &LoopConfig,
    backends: &Backends,
    opts: &EvalOptions,
) -> Result<Vec<SweepRow>, BenchError> {
    if values.is_empty() {
        return Err(BenchError::NoSweepValues);
    }
    values
        .iter()
        .map(|&value| {
            let eval = match axis {
                SweepAxis::Rounds => {
                    let c = LoopConfig { max_rounds: value, ..config.clone() };
                    evaluate(items, assets, &c, backends, opts)?
                }
                SweepAxis::InitFrames => {
                    let c = LoopConfig { init_frames: value, ..config.clone() };
                    evaluate(items, assets, &c, backends, opts)?
                }
                SweepAxis::Budget => uniform_baseline(items, assets, value, config, backends, opts)?,
            };
            Ok(SweepRow { axis, value, metrics: eval.metrics })
        })
        .collect()
}

/// Plot-ready CSV, one row per swept value.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "axis", "value", "accuracy", "mean_frames", "min_frames", "max_frames", "mean_rounds",
        "evaluated", "skipped", "degraded",
    ])
    .expect("in-memory csv");
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.axis.as_str().to_string(),
            r.value.to_string(),
            format!("{:.4}", m.accuracy),
            format!("{:.3}", m.mean_frames),
            m.min_frames.to_string(),
            m.max_frames.to_string(),
            format!("{:.3}", m.mean_rounds),
            m.evaluated.to_string(),
            m.skipped.to_string(),
            m.degraded.to_string(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}
