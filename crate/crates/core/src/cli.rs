//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 error (including usage errors), 2 when `answer`
//! had to fall back to a default answer.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::agent::{run, Backends, LoopConfig, RunTrace};
use crate::assets::{load_assets, validate_assets, AssetSource, DirAssets};
use crate::bench::{evaluate, load_dataset, sweep, sweep_csv, uniform_baseline, EvalOptions, SweepAxis};
use crate::captioner::{CaptionBackend, HttpCaptioner, StoreCaptioner};
use crate::http::RetryPolicy;
use crate::llm::{ChatBackend, Confidence, LlmClient, OpenAiChat, Question, ReplayCache, ScriptedMock, Unconfigured};
use crate::retrieval::{HashEmbedder, HttpEmbedder, TableEmbedder, TextEmbedder};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_DEGRADED: i32 = 2;

pub const API_KEY_ENV: &str = "FRAMEAGENT_API_KEY";

#[derive(Debug, Parser)]
#[command(name = "frameagent", version, about = "Iterative frame-selection agent for long-video QA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Answer one question about one video.
    Answer(AnswerArgs),
    /// Evaluate a dataset, optionally sweeping one parameter.
    Bench(BenchArgs),
    /// Check an asset bundle.
    Validate {
        /// Bundle directory holding captions.tsv and embeddings.faem.
        dir: PathBuf,
    },
    /// Print a trace round by round.
    Trace {
        file: PathBuf,
        /// Include prompts and raw responses.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Debug, Args)]
struct AnswerArgs {
    /// Bundle directory.
    #[arg(long)]
    assets: PathBuf,
    #[arg(long, short)]
    question: String,
    /// Answer option; repeat once per option, in order.
    #[arg(long = "option", short = 'o', required = true)]
    options: Vec<String>,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// JSONL dataset, one question per line.
    #[arg(long)]
    dataset: PathBuf,
    /// Directory with one bundle subdirectory per video id.
    #[arg(long)]
    assets: PathBuf,
    #[arg(long, env = "FRAMEAGENT_WORKERS")]
    workers: Option<usize>,
    /// Sweep this parameter (rounds, init_frames, budget).
    #[arg(long, requires = "values")]
    axis: Option<SweepAxis>,
    #[arg(long, value_delimiter = ',', requires = "axis")]
    values: Vec<u32>,
    /// Run the uniform-sampling baseline with this frame budget instead of the agent.
    #[arg(long, conflicts_with = "axis")]
    baseline_budget: Option<u32>,
    /// Write metrics (or sweep rows) as JSON.
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    /// Write sweep rows as CSV instead of printing them.
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Write one trace per item into this directory.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Stop at the first failing item.
    #[arg(long)]
    fail_fast: bool,
    #[command(flatten)]
    run: RunArgs,
}

/// Backend and loop flags shared by `answer` and `bench`.
#[derive(Debug, Args)]
struct RunArgs {
    /// TOML file with defaults for any of these settings.
    #[arg(long, env = "FRAMEAGENT_CONFIG")]
    config: Option<PathBuf>,
    /// Chat-completions URL of the controller model.
    #[arg(long, env = "FRAMEAGENT_LLM_ENDPOINT")]
    llm_endpoint: Option<String>,
    #[arg(long, env = "FRAMEAGENT_MODEL")]
    model: Option<String>,
    #[arg(long, env = "FRAMEAGENT_EMBED_ENDPOINT")]
    embed_endpoint: Option<String>,
    /// JSON object mapping query text to a vector.
    #[arg(long, env = "FRAMEAGENT_QUERY_TABLE")]
    query_table: Option<PathBuf>,
    #[arg(long, env = "FRAMEAGENT_CAPTION_ENDPOINT")]
    caption_endpoint: Option<String>,
    /// JSON script of canned controller responses.
    #[arg(long, env = "FRAMEAGENT_MOCK_SCRIPT")]
    mock_script: Option<PathBuf>,
    /// Directory of cached controller responses; hits make no backend call.
    #[arg(long, env = "FRAMEAGENT_REPLAY_CACHE")]
    replay_cache: Option<PathBuf>,
    #[arg(long)]
    init_frames: Option<u32>,
    #[arg(long)]
    max_rounds: Option<u32>,
    /// 1, 2 or 3.
    #[arg(long, value_parser = parse_confidence)]
    confidence_threshold: Option<Confidence>,
    #[arg(long)]
    max_queries: Option<usize>,
    #[arg(long)]
    no_self_eval: bool,
    #[arg(long)]
    no_segments: bool,
    /// Omit wall-clock timings so reruns write identical traces.
    #[arg(long)]
    no_timing: bool,
}

fn parse_confidence(s: &str) -> Result<Confidence, String> {
    let level: u8 = s.parse().map_err(|_| format!("expected 1, 2 or 3, got {s:?}"))?;
    Confidence::try_from(level)
}

/// Settings after merging flags, environment, config file and defaults,
/// in that order of precedence. The API key is never part of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub llm_endpoint: Option<String>,
    pub model: String,
    pub embed_endpoint: Option<String>,
    pub query_table: Option<PathBuf>,
    /// Dimension of the fallback hash embedder; defaults to the bundle's.
    pub embed_dim: Option<usize>,
    pub embed_seed: u64,
    pub caption_endpoint: Option<String>,
    pub mock_script: Option<PathBuf>,
    pub replay_cache: Option<PathBuf>,
    pub workers: usize,
    #[serde(rename = "loop")]
    pub loop_config: LoopConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            llm_endpoint: None,
            model: "gpt-4-1106-preview".into(),
            embed_endpoint: None,
            query_table: None,
            embed_dim: None,
            embed_seed: 0,
            caption_endpoint: None,
            mock_script: None,
            replay_cache: None,
            workers: 0,
            loop_config: LoopConfig::default(),
        }
    }
}

impl CliConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    fn merge(args: &RunArgs) -> Result<Self, String> {
        let mut c = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => Self::default(),
        };
        fn set<T: Clone>(slot: &mut T, flag: &Option<T>) {
            if let Some(v) = flag {
                *slot = v.clone();
            }
        }
        fn set_opt<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
            if flag.is_some() {
                *slot = flag.clone();
            }
        }
        set_opt(&mut c.llm_endpoint, &args.llm_endpoint);
        set(&mut c.model, &args.model);
        set_opt(&mut c.embed_endpoint, &args.embed_endpoint);
        set_opt(&mut c.query_table, &args.query_table);
        set_opt(&mut c.caption_endpoint, &args.caption_endpoint);
        set_opt(&mut c.mock_script, &args.mock_script);
        set_opt(&mut c.replay_cache, &args.replay_cache);
        let l = &mut c.loop_config;
        set(&mut l.init_frames, &args.init_frames);
        set(&mut l.max_rounds, &args.max_rounds);
        set(&mut l.confidence_threshold, &args.confidence_threshold);
        set(&mut l.max_queries, &args.max_queries);
        if args.no_self_eval {
            l.self_evaluation = false;
        }
        if args.no_segments {
            l.segment_selection = false;
        }
        if args.no_timing {
            l.record_timing = false;
        }
        l.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }

    fn policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.loop_config.net_retries,
            ..RetryPolicy::default()
        }
    }

    /// Controller, captioner and embedder selected by this config. The hash
    /// embedder is used when no endpoint or table is given.
    pub fn backends(&self, api_key: Option<String>, asset_dim: usize) -> Result<Backends, String> {
        let chat: Arc<dyn ChatBackend> = if let Some(path) = &self.mock_script {
            Arc::new(ScriptedMock::from_file(path).map_err(|e| e.to_string())?)
        } else if let Some(url) = &self.llm_endpoint {
            Arc::new(OpenAiChat::new(url, &self.model, api_key, self.policy()).map_err(|e| e.to_string())?)
        } else {
            Arc::new(Unconfigured)
        };
        let mut llm = LlmClient::new(chat).with_params(self.loop_config.decoding.clone());
        if let Some(dir) = &self.replay_cache {
            llm = llm.with_cache(ReplayCache::open(dir).map_err(|e| e.to_string())?);
        }
        let captioner: Arc<dyn CaptionBackend> = match &self.caption_endpoint {
            Some(url) => Arc::new(HttpCaptioner::new(url, self.policy()).map_err(|e| e.to_string())?),
            None => Arc::new(StoreCaptioner),
        };
        let embedder: Arc<dyn TextEmbedder> = if let Some(url) = &self.embed_endpoint {
            Arc::new(HttpEmbedder::new(url, self.policy()).map_err(|e| e.to_string())?)
        } else if let Some(path) = &self.query_table {
            Arc::new(TableEmbedder::from_json_file(path).map_err(|e| e.to_string())?)
        } else {
            Arc::new(HashEmbedder::new(self.embed_dim.unwrap_or(asset_dim), self.embed_seed))
        };
        Ok(Backends { llm, captioner, embedder })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_ERROR
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
    let result = match cli.command {
        Command::Answer(a) => cmd_answer(&a, api_key, out),
        Command::Bench(b) => cmd_bench(&b, api_key, out),
        Command::Validate { dir } => cmd_validate(&dir, out),
        Command::Trace { file, full } => cmd_trace(&file, full, out),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_ERROR
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn io(e: std::io::Error) -> String {
    e.to_string()
}

fn cmd_answer(args: &AnswerArgs, api_key: Option<String>, out: &mut dyn Write) -> Result<i32, String> {
    let config = CliConfig::merge(&args.run)?;
    let assets = load_assets(&args.assets).map_err(|e| e.to_string())?;
    let backends = config.backends(api_key, assets.dim())?;
    let question = Question::new(args.question.clone(), args.options.iter().cloned());
    let write_trace = |trace: &RunTrace| -> Result<(), String> {
        match &args.trace_out {
            Some(path) => {
                let mut trace = trace.clone();
                trace.config = config.to_json();
                write_file(path, &trace.to_lines())
            }
            None => Ok(()),
        }
    };
    match run(&question, &assets, &config.loop_config, &backends) {
        Ok((answer, trace)) => {
            write_trace(&trace)?;
            writeln!(out, "{answer}\t{}", question.options[answer]).map_err(io)?;
            Ok(if trace.degraded { EXIT_DEGRADED } else { EXIT_OK })
        }
        Err(failure) => {
            write_trace(&failure.partial)?;
            Err(failure.error.to_string())
        }
    }
}

fn cmd_bench(args: &BenchArgs, api_key: Option<String>, out: &mut dyn Write) -> Result<i32, String> {
    let mut config = CliConfig::merge(&args.run)?;
    if let Some(w) = args.workers {
        config.workers = w;
    }
    let items = load_dataset(&args.dataset).map_err(|e| e.to_string())?;
    let first = items.first().ok_or("dataset is empty")?;
    let assets = DirAssets::new(&args.assets);
    let dim = assets.get(&first.video_id).map_err(|e| e.to_string())?.dim();
    let backends = config.backends(api_key, dim)?;
    let opts = EvalOptions {
        workers: config.workers,
        fail_fast: args.fail_fast,
        trace_dir: args.trace_dir.clone(),
        trace_config: Some(config.to_json()),
    };
    let lc = &config.loop_config;

    if let Some(axis) = args.axis {
        let rows = sweep(&items, &assets, axis, &args.values, lc, &backends, &opts).map_err(|e| e.to_string())?;
        if let Some(path) = &args.metrics_out {
            write_file(path, &serde_json::to_string_pretty(&rows).expect("rows serialize"))?;
        }
        let csv = sweep_csv(&rows);
        match &args.csv_out {
            Some(path) => {
                write_file(path, &csv)?;
                for r in &rows {
                    writeln!(out, "{}={} {}", axis.as_str(), r.value, r.metrics.summary_line()).map_err(io)?;
                }
            }
            None => write!(out, "{csv}").map_err(io)?,
        }
        return Ok(EXIT_OK);
    }

    let eval = match args.baseline_budget {
        Some(b) => uniform_baseline(&items, &assets, b, lc, &backends, &opts),
        None => evaluate(&items, &assets, lc, &backends, &opts),
    }
    .map_err(|e| e.to_string())?;
    if let Some(path) = &args.metrics_out {
        write_file(path, &serde_json::to_string_pretty(&eval).expect("evaluation serializes"))?;
    }
    writeln!(out, "{}", eval.metrics.summary_line()).map_err(io)?;
    Ok(EXIT_OK)
}

fn cmd_validate(dir: &Path, out: &mut dyn Write) -> Result<i32, String> {
    match load_assets(dir) {
        Ok(assets) => {
            let report = validate_assets(&assets);
            if report.is_empty() {
                writeln!(out, "OK").map_err(io)?;
                return Ok(EXIT_OK);
            }
            for v in &report {
                writeln!(out, "{v}").map_err(io)?;
            }
        }
        Err(crate::assets::AssetError::Invalid(report)) => {
            for v in &report {
                writeln!(out, "{v}").map_err(io)?;
            }
        }
        Err(e) => writeln!(out, "{e}").map_err(io)?,
    }
    Ok(EXIT_ERROR)
}

fn cmd_trace(file: &Path, full: bool, out: &mut dyn Write) -> Result<i32, String> {
    let text = fs::read_to_string(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let trace = RunTrace::from_lines(&text).map_err(|e| e.to_string())?;
    write!(out, "{}", trace.pretty(full)).map_err(io)?;
    Ok(EXIT_OK)
}
