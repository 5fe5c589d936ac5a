//! Per-video asset bundles: dense per-frame captions and unit-norm embeddings.
//!
//! A bundle directory holds two files:
//!
//! * `captions.tsv`: one `frame_index<TAB>caption` line per frame, indices
//!   strictly increasing from 1.
//! * `embeddings.faem`: little-endian binary, magic `FAEM`, `u32` version (1),
//!   `u32` frame count, `u32` dimension, then one row of `f32` per frame.
//!
//! Frames are 1-indexed and decoded at 1 fps, so a frame index is roughly the
//! timestamp in seconds.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use thiserror::Error;

pub const CAPTION_FILE: &str = "captions.tsv";
pub const EMBEDDING_FILE: &str = "embeddings.faem";
pub const EMBEDDING_MAGIC: &[u8; 4] = b"FAEM";
pub const EMBEDDING_VERSION: u32 = 1;
/// Allowed deviation of an embedding's L2 norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-5;

const HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("missing {kind} file {path}")]
    MissingFile { kind: &'static str, path: PathBuf },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("caption file line {line}: {reason}")]
    MalformedCaption { line: usize, reason: String },
    #[error("caption gap at frame {frame}")]
    CaptionGap { frame: u32 },
    #[error("embedding header: {0}")]
    BadHeader(String),
    #[error("embedding file holds {found} bytes of rows, expected {expected}")]
    BadLength { expected: usize, found: usize },
    #[error("header/dimension mismatch: {captions} captions but {embeddings} embedding rows")]
    FrameCountMismatch { captions: u32, embeddings: u32 },
    #[error("caption for frame {frame} contains a line break")]
    UnwritableCaption { frame: u32 },
    #[error("invalid bundle: {}", .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Invalid(Vec<Violation>),
    #[error("no asset bundle for video {0}")]
    UnknownVideo(String),
}

/// One broken invariant of a [`VideoAssets`] bundle.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    EmptyBundle,
    ZeroDimension,
    CaptionGap { frame: u32 },
    EmbeddingGap { frame: u32 },
    NonFinite { frame: u32 },
    NormViolation { frame: u32, norm: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyBundle => write!(f, "bundle has no frames"),
            Violation::ZeroDimension => write!(f, "embedding dimension is zero"),
            Violation::CaptionGap { frame } => write!(f, "caption gap at frame {frame}"),
            Violation::EmbeddingGap { frame } => write!(f, "embedding gap at frame {frame}"),
            Violation::NonFinite { frame } => {
                write!(f, "non-finite embedding value at frame {frame}")
            }
            Violation::NormViolation { frame, norm } => {
                write!(f, "norm violation at frame {frame} (norm {norm:.6})")
            }
        }
    }
}

/// Immutable per-video bundle. Index `k` in the public API is frame `k`
/// (1-based); storage is 0-based internally.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoAssets {
    video_id: String,
    captions: Vec<String>,
    embeddings: Vec<f32>,
    dim: usize,
}

impl VideoAssets {
    /// Builds a bundle without checking invariants. Pair with
    /// [`validate_assets`] or use [`VideoAssets::try_new`].
    pub fn from_parts(
        video_id: impl Into<String>,
        captions: Vec<String>,
        embeddings: Vec<f32>,
        dim: usize,
    ) -> Self {
        Self {
            video_id: video_id.into(),
            captions,
            embeddings,
            dim,
        }
    }

    pub fn try_new(
        video_id: impl Into<String>,
        captions: Vec<String>,
        embeddings: Vec<f32>,
        dim: usize,
    ) -> Result<Self, AssetError> {
        let assets = Self::from_parts(video_id, captions, embeddings, dim);
        let report = validate_assets(&assets);
        if report.is_empty() {
            Ok(assets)
        } else {
            Err(AssetError::Invalid(report))
        }
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn frame_count(&self) -> u32 {
        self.captions.len() as u32
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn caption(&self, frame: u32) -> Option<&str> {
        let idx = (frame as usize).checked_sub(1)?;
        self.captions.get(idx).map(String::as_str)
    }

    pub fn embedding(&self, frame: u32) -> Option<&[f32]> {
        let idx = (frame as usize).checked_sub(1)?;
        let start = idx.checked_mul(self.dim)?;
        self.embeddings.get(start..start + self.dim)
    }

    pub fn captions(&self) -> &[String] {
        &self.captions
    }

    /// Row-major `frame_count × dim` matrix.
    pub fn embedding_matrix(&self) -> &[f32] {
        &self.embeddings
    }
}

/// Checks every bundle invariant; an empty report means the bundle is valid.
pub fn validate_assets(assets: &VideoAssets) -> Vec<Violation> {
    let mut report = Vec::new();
    let frames = assets.captions.len();
    if frames == 0 {
        report.push(Violation::EmptyBundle);
    }
    if assets.dim == 0 {
        report.push(Violation::ZeroDimension);
        return report;
    }
    // A ragged tail counts as a missing row.
    let complete_rows = assets.embeddings.len() / assets.dim;
    for frame in complete_rows.min(frames)..frames {
        report.push(Violation::EmbeddingGap {
            frame: frame as u32 + 1,
        });
    }
    for frame in frames..complete_rows {
        report.push(Violation::CaptionGap {
            frame: frame as u32 + 1,
        });
    }
    for (i, row) in assets
        .embeddings
        .chunks_exact(assets.dim)
        .take(complete_rows)
        .enumerate()
    {
        let frame = i as u32 + 1;
        if row.iter().any(|v| !v.is_finite()) {
            report.push(Violation::NonFinite { frame });
            continue;
        }
        let norm = row
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            report.push(Violation::NormViolation { frame, norm });
        }
    }
    report
}

/// Loads and validates the bundle stored in directory `dir`.
pub fn load_assets(dir: impl AsRef<Path>) -> Result<VideoAssets, AssetError> {
    let dir = dir.as_ref();
    let video_id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let captions = read_captions(&dir.join(CAPTION_FILE))?;
    let (frames, dim, embeddings) = read_embeddings(&dir.join(EMBEDDING_FILE))?;
    if frames as usize != captions.len() {
        return Err(AssetError::FrameCountMismatch {
            captions: captions.len() as u32,
            embeddings: frames,
        });
    }
    VideoAssets::try_new(video_id, captions, embeddings, dim)
}

/// Writes `assets` into directory `dir` (created if absent).
pub fn write_assets(assets: &VideoAssets, dir: impl AsRef<Path>) -> Result<(), AssetError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| AssetError::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let mut text = String::new();
    for (i, caption) in assets.captions.iter().enumerate() {
        if caption.contains(['\n', '\r']) {
            return Err(AssetError::UnwritableCaption {
                frame: i as u32 + 1,
            });
        }
        text.push_str(&format!("{}\t{}\n", i + 1, caption));
    }
    let caption_path = dir.join(CAPTION_FILE);
    fs::write(&caption_path, text).map_err(|source| AssetError::Io {
        path: caption_path,
        source,
    })?;

    let mut bytes = Vec::with_capacity(HEADER_LEN + assets.embeddings.len() * 4);
    bytes.extend_from_slice(EMBEDDING_MAGIC);
    bytes.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
    bytes.extend_from_slice(&assets.frame_count().to_le_bytes());
    bytes.extend_from_slice(&(assets.dim as u32).to_le_bytes());
    for v in &assets.embeddings {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let emb_path = dir.join(EMBEDDING_FILE);
    let mut file = fs::File::create(&emb_path).map_err(|source| AssetError::Io {
        path: emb_path.clone(),
        source,
    })?;
    file.write_all(&bytes).map_err(|source| AssetError::Io {
        path: emb_path,
        source,
    })
}

fn read_file(path: &Path, kind: &'static str) -> Result<Vec<u8>, AssetError> {
    match fs::read(path) {
        Ok(bytes) => Ok(bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(AssetError::MissingFile {
            kind,
            path: path.to_path_buf(),
        }),
        Err(source) => Err(AssetError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

fn read_captions(path: &Path) -> Result<Vec<String>, AssetError> {
    let bytes = read_file(path, "caption")?;
    let text = String::from_utf8(bytes).map_err(|e| AssetError::MalformedCaption {
        line: 0,
        reason: format!("not UTF-8: {e}"),
    })?;
    parse_captions(&text)
}

/// Parses the line-delimited caption format.
pub fn parse_captions(text: &str) -> Result<Vec<String>, AssetError> {
    let mut captions = Vec::new();
    for (n, line) in text.split('\n').enumerate() {
        let line_no = n + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        let (index, caption) = line
            .split_once('\t')
            .ok_or_else(|| AssetError::MalformedCaption {
                line: line_no,
                reason: "missing tab separator".into(),
            })?;
        let index: u32 = index.trim().parse().map_err(|_| AssetError::MalformedCaption {
            line: line_no,
            reason: format!("bad frame index {index:?}"),
        })?;
        let expected = captions.len() as u32 + 1;
        if index > expected {
            return Err(AssetError::CaptionGap { frame: expected });
        }
        if index < expected {
            return Err(AssetError::MalformedCaption {
                line: line_no,
                reason: format!("frame index {index} is not strictly increasing"),
            });
        }
        captions.push(caption.to_string());
    }
    Ok(captions)
}

fn read_embeddings(path: &Path) -> Result<(u32, usize, Vec<f32>), AssetError> {
    let bytes = read_file(path, "embedding")?;
    parse_embeddings(&bytes)
}

/// Parses an `FAEM` buffer into `(frame_count, dim, row-major values)`.
pub fn parse_embeddings(bytes: &[u8]) -> Result<(u32, usize, Vec<f32>), AssetError> {
    if bytes.len() < HEADER_LEN {
        return Err(AssetError::BadHeader(format!(
            "file is {} bytes, shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..4] != EMBEDDING_MAGIC {
        return Err(AssetError::BadHeader("bad magic bytes".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != EMBEDDING_VERSION {
        return Err(AssetError::BadHeader(format!(
            "unsupported version {version}"
        )));
    }
    let frames = word(8);
    let dim = word(12) as usize;
    if dim == 0 {
        return Err(AssetError::BadHeader("dimension is zero".into()));
    }
    let expected = frames as usize * dim * 4;
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected {
        return Err(AssetError::BadLength {
            expected,
            found: body.len(),
        });
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok((frames, dim, values))
}

/// Where the engine looks up bundles by video id.
pub trait AssetSource: Send + Sync {
    fn get(&self, video_id: &str) -> Result<Arc<VideoAssets>, AssetError>;
}

/// Bundles kept in memory, keyed by video id.
#[derive(Debug, Default, Clone)]
pub struct MemoryAssets {
    bundles: HashMap<String, Arc<VideoAssets>>,
}

impl MemoryAssets {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, assets: VideoAssets) {
        self.bundles
            .insert(assets.video_id().to_string(), Arc::new(assets));
    }
}

impl FromIterator<VideoAssets> for MemoryAssets {
    fn from_iter<I: IntoIterator<Item = VideoAssets>>(iter: I) -> Self {
        let mut out = Self::new();
        for a in iter {
            out.insert(a);
        }
        out
    }
}

impl AssetSource for MemoryAssets {
    fn get(&self, video_id: &str) -> Result<Arc<VideoAssets>, AssetError> {
        self.bundles
            .get(video_id)
            .cloned()
            .ok_or_else(|| AssetError::UnknownVideo(video_id.to_string()))
    }
}

/// Bundles stored as `<root>/<video_id>/`, loaded lazily and cached.
#[derive(Debug)]
pub struct DirAssets {
    root: PathBuf,
    cache: RwLock<HashMap<String, Arc<VideoAssets>>>,
}

impl DirAssets {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            cache: RwLock::new(HashMap::new()),
        }
    }
}

impl AssetSource for DirAssets {
    fn get(&self, video_id: &str) -> Result<Arc<VideoAssets>, AssetError> {
        if let Some(hit) = self.cache.read().expect("asset cache poisoned").get(video_id) {
            return Ok(hit.clone());
        }
        let dir = self.root.join(video_id);
        if !dir.is_dir() {
            return Err(AssetError::UnknownVideo(video_id.to_string()));
        }
        let assets = Arc::new(load_assets(&dir)?);
        self.cache
            .write()
            .expect("asset cache poisoned")
            .insert(video_id.to_string(), assets.clone());
        Ok(assets)
    }
}
