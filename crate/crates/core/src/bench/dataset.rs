//! Canonical dataset format and converters from upstream benchmark layouts.
//!
//! One JSON object per line:
//! `{"video_id": str, "question": str, "options": [str, ...], "answer_index": int?, "qtype": str?}`

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::llm::Question;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("conversion: {0}")]
    Convert(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub video_id: String,
    pub question: String,
    pub options: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qtype: Option<String>,
}

impl QaItem {
    pub fn as_question(&self) -> Question {
        Question::new(self.question.clone(), self.options.iter().cloned())
    }

    fn check(&self) -> Result<(), String> {
        if self.options.len() < 2 {
            return Err(format!("{} options; at least 2 required", self.options.len()));
        }
        if let Some(a) = self.answer_index {
            if a >= self.options.len() {
                return Err(format!(
                    "answer_index {a} out of range for {} options",
                    self.options.len()
                ));
            }
        }
        Ok(())
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<QaItem>, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<Vec<QaItem>, DatasetError> {
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| DatasetError::Malformed { line: i + 1, reason };
        let item: QaItem = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        item.check().map_err(malformed)?;
        items.push(item);
    }
    Ok(items)
}

pub fn write_dataset(items: &[QaItem]) -> String {
    items
        .iter()
        .map(|i| serde_json::to_string(i).expect("item serializes") + "\n")
        .collect()
}

/// EgoSchema's `questions.json` (a list of objects with `q_uid`, `question`,
/// `option 0`..`option 4`) plus the optional `subset_answers.json`
/// (`{q_uid: index}`). The video id is the `q_uid`.
pub fn convert_egoschema(
    questions_json: &str,
    answers_json: Option<&str>,
) -> Result<Vec<QaItem>, DatasetError> {
    let err = |e: serde_json::Error| DatasetError::Convert(e.to_string());
    let questions: Vec<HashMap<String, Value>> = serde_json::from_str(questions_json).map_err(err)?;
    let answers: HashMap<String, usize> = match answers_json {
        Some(text) => serde_json::from_str(text).map_err(err)?,
        None => HashMap::new(),
    };
    questions
        .iter()
        .map(|q| {
            let field = |k: &str| {
                q.get(k)
                    .and_then(Value::as_str)
                    .map(str::to_string)
                    .ok_or_else(|| DatasetError::Convert(format!("record lacks {k:?}")))
            };
            let uid = field("q_uid")?;
            let mut options = Vec::new();
            for i in 0.. {
                match q.get(&format!("option {i}")).and_then(Value::as_str) {
                    Some(o) => options.push(o.to_string()),
                    None => break,
                }
            }
            let item = QaItem {
                answer_index: answers.get(&uid).copied(),
                video_id: uid,
                question: field("question")?,
                options,
                qtype: None,
            };
            item.check().map_err(DatasetError::Convert)?;
            Ok(item)
        })
        .collect()
}

/// NExT-QA's CSV (`video, ..., question, answer, qid, type, a0..a4`). The
/// type code's first letter maps to causal / temporal / descriptive.
pub fn convert_nextqa(csv_text: &str) -> Result<Vec<QaItem>, DatasetError> {
    let err = |e: csv::Error| DatasetError::Convert(e.to_string());
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = reader.headers().map_err(err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::Convert(format!("missing column {name:?}")))
    };
    let (video, question, answer, kind) = (col("video")?, col("question")?, col("answer")?, col("type")?);
    let option_cols: Vec<usize> = (0..)
        .map_while(|i| headers.iter().position(|h| h == format!("a{i}")))
        .collect();
    let mut items = Vec::new();
    for record in reader.records() {
        let record = record.map_err(err)?;
        let get = |i: usize| record.get(i).unwrap_or_default().to_string();
        let qtype = match get(kind).chars().next() {
            Some('C') => Some("causal".to_string()),
            Some('T') => Some("temporal".to_string()),
            Some('D') => Some("descriptive".to_string()),
            _ => None,
        };
        let item = QaItem {
            video_id: get(video),
            question: get(question),
            options: option_cols.iter().map(|&c| get(c)).collect(),
            answer_index: get(answer).trim().parse().ok(),
            qtype,
        };
        item.check().map_err(DatasetError::Convert)?;
        items.push(item);
    }
    Ok(items)
}
