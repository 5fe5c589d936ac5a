//! Lenient extraction of the map literals the prompts ask for.
//!
//! Models answer with Python-style dicts as often as with JSON, sometimes in
//! code fences, sometimes after pages of reasoning. The extractor takes the
//! last `{...}` literal in the text that parses and contains the wanted key.
//! Strings may use single, double, or typographic quotes.

use serde_json::{Map, Number, Value};
use thiserror::Error;

use super::Confidence;
use crate::retrieval::{PlanItem, RetrievalPlan, Segment};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("no map literal with key {0:?}")]
    NoLiteral(&'static str),
    #[error("value for {key:?} is not usable: {value}")]
    BadValue { key: &'static str, value: String },
    #[error("answer index {index} out of range for {options} options")]
    OutOfRange { index: i64, options: usize },
}

const MAX_DEPTH: usize = 64;

/// Returns `(chosen option, reasoning text before the literal)`.
pub fn parse_answer(raw: &str, num_options: usize) -> Result<(usize, String), ParseError> {
    const KEY: &str = "final_answer";
    let (start, value) = last_literal_with_key(raw, KEY).ok_or(ParseError::NoLiteral(KEY))?;
    let index = integer_value(&value).ok_or_else(|| ParseError::BadValue {
        key: KEY,
        value: value.to_string(),
    })?;
    if index < 0 || index as usize >= num_options {
        return Err(ParseError::OutOfRange {
            index,
            options: num_options,
        });
    }
    Ok((index as usize, rationale_before(&raw[..start])))
}

pub fn parse_confidence(raw: &str) -> Result<Confidence, ParseError> {
    const KEY: &str = "confidence";
    let (_, value) = last_literal_with_key(raw, KEY).ok_or(ParseError::NoLiteral(KEY))?;
    integer_value(&value)
        .and_then(|l| u8::try_from(l).ok())
        .and_then(Confidence::from_level)
        .ok_or_else(|| ParseError::BadValue {
            key: KEY,
            value: value.to_string(),
        })
}

/// Keeps `(segment_id, description)` pairs that target a live segment with
/// unseen frames, in order, up to `cap`. The `duration` field is ignored.
pub fn parse_plan(raw: &str, segments: &[Segment], cap: usize) -> Result<RetrievalPlan, ParseError> {
    let items = plan_items(raw)?;
    let live = |id: u32| segments.iter().any(|s| s.id == id && !s.is_empty());
    let items = items
        .iter()
        .filter_map(|item| {
            let id = item.get("segment_id").and_then(integer_value)?;
            let id = u32::try_from(id).ok()?;
            let query = description(item)?;
            live(id).then_some(PlanItem {
                segment_id: id,
                query,
            })
        })
        .take(cap)
        .collect();
    Ok(RetrievalPlan { items })
}

/// Plan parsing when segment selection is off: every description targets
/// segment 1, the whole unseen range.
pub fn parse_plan_whole_video(raw: &str, cap: usize) -> Result<RetrievalPlan, ParseError> {
    let items = plan_items(raw)?
        .iter()
        .filter_map(description)
        .take(cap)
        .map(|query| PlanItem {
            segment_id: 1,
            query,
        })
        .collect();
    Ok(RetrievalPlan { items })
}

fn plan_items(raw: &str) -> Result<Vec<Value>, ParseError> {
    const KEY: &str = "frame_descriptions";
    let (_, value) = last_literal_with_key(raw, KEY).ok_or(ParseError::NoLiteral(KEY))?;
    match value {
        Value::Array(items) => Ok(items),
        other => Err(ParseError::BadValue {
            key: KEY,
            value: other.to_string(),
        }),
    }
}

fn description(item: &Value) -> Option<String> {
    let text = item.get("description")?.as_str()?.trim();
    (!text.is_empty()).then(|| text.to_string())
}

/// Accepts integers, integral floats, and strings whose trimmed form starts
/// with an optionally signed run of digits (`'4'`, `"2. because"`).
fn integer_value(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0 && f.abs() < 1e15).map(|f| f as i64)),
        Value::String(s) => {
            let s = s.trim();
            let (neg, digits) = match s.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, s),
            };
            let end = digits
                .char_indices()
                .find(|(_, c)| !c.is_ascii_digit())
                .map_or(digits.len(), |(i, _)| i);
            let n: i64 = digits[..end].parse().ok()?;
            Some(if neg { -n } else { n })
        }
        _ => None,
    }
}

fn rationale_before(prefix: &str) -> String {
    let mut text = prefix.trim_end();
    // drop an opening code fence directly in front of the literal
    if let Some(pos) = text.rfind("```") {
        let tail = &text[pos + 3..];
        if tail.chars().all(|c| c.is_ascii_alphanumeric()) {
            text = text[..pos].trim_end();
        }
    }
    text.trim().to_string()
}

/// Byte offset and value of the last map literal containing `key` at its top level.
fn last_literal_with_key(text: &str, key: &str) -> Option<(usize, Value)> {
    let opens: Vec<usize> = text.match_indices('{').map(|(i, _)| i).collect();
    opens.into_iter().rev().find_map(|start| {
        let mut p = Parser::new(&text[start..]);
        match p.value(0) {
            Some(Value::Object(map)) => map.get(key).cloned().map(|v| (start, v)),
            _ => None,
        }
    })
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn value(&mut self, depth: usize) -> Option<Value> {
        if depth > MAX_DEPTH {
            return None;
        }
        self.skip_ws();
        match self.peek()? {
            '{' => self.object(depth),
            '[' => self.array(depth),
            c if closing_quote(c).is_some() => self.string().map(Value::String),
            c if c == '-' || c.is_ascii_digit() => self.number(),
            _ => self.word(),
        }
    }

    fn object(&mut self, depth: usize) -> Option<Value> {
        self.bump();
        let mut map = Map::new();
        if self.eat('}') {
            return Some(Value::Object(map));
        }
        loop {
            self.skip_ws();
            let key = match self.peek()? {
                c if closing_quote(c).is_some() => self.string()?,
                _ => self.bare_key()?,
            };
            if !self.eat(':') {
                return None;
            }
            let v = self.value(depth + 1)?;
            map.insert(key.trim().to_string(), v);
            if self.eat(',') {
                // tolerate a trailing comma
                if self.eat('}') {
                    return Some(Value::Object(map));
                }
                continue;
            }
            return self.eat('}').then_some(Value::Object(map));
        }
    }

    fn array(&mut self, depth: usize) -> Option<Value> {
        self.bump();
        let mut items = Vec::new();
        if self.eat(']') {
            return Some(Value::Array(items));
        }
        loop {
            items.push(self.value(depth + 1)?);
            if self.eat(',') {
                if self.eat(']') {
                    return Some(Value::Array(items));
                }
                continue;
            }
            return self.eat(']').then_some(Value::Array(items));
        }
    }

    fn string(&mut self) -> Option<String> {
        let open = self.bump()?;
        let close = closing_quote(open)?;
        let mut out = String::new();
        loop {
            let c = self.bump()?;
            if c == '\\' {
                let escaped = self.bump()?;
                out.push(match escaped {
                    'n' => '\n',
                    't' => '\t',
                    'r' => '\r',
                    other => other,
                });
            } else if c == close || (c == '\u{2019}' && open == '\'') || (c == '\u{201D}' && open == '"') {
                // a doubled single quote inside a single-quoted string is an escaped quote
                if c == '\'' && open == '\'' && self.peek() == Some('\'') {
                    self.bump();
                    out.push('\'');
                    continue;
                }
                return Some(out);
            } else {
                out.push(c);
            }
        }
    }

    fn number(&mut self) -> Option<Value> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'e' | 'E'))
        {
            self.bump();
        }
        let text = &self.src[start..self.pos];
        if let Ok(i) = text.parse::<i64>() {
            return Some(Value::Number(i.into()));
        }
        text.parse::<f64>().ok().and_then(Number::from_f64).map(Value::Number)
    }

    fn word(&mut self) -> Option<Value> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            self.bump();
        }
        match &self.src[start..self.pos] {
            "true" | "True" => Some(Value::Bool(true)),
            "false" | "False" => Some(Value::Bool(false)),
            "null" | "None" => Some(Value::Null),
            _ => None,
        }
    }

    fn bare_key(&mut self) -> Option<String> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || c == '_')
        {
            self.bump();
        }
        (self.pos > start).then(|| self.src[start..self.pos].to_string())
    }
}

fn closing_quote(open: char) -> Option<char> {
    match open {
        '\'' => Some('\''),
        '"' => Some('"'),
        '\u{2018}' => Some('\u{2019}'),
        '\u{201C}' => Some('\u{201D}'),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::partition_segments;

    #[test]
    fn answer_from_fenced_single_quoted_literal() {
        let raw = "Reasoning here.\n\nNow the JSON:\n\n```\n{'final_answer': '4'}\n```";
        let (idx, why) = parse_answer(raw, 5).unwrap();
        assert_eq!(idx, 4);
        assert_eq!(why, "Reasoning here.\n\nNow the JSON:");
    }

    #[test]
    fn answer_lenient_typing() {
        assert_eq!(parse_answer("{\"final_answer\": 2}", 5).unwrap(), (2, String::new()));
        assert_eq!(parse_answer("```json\n{\"final_answer\": \"3\"}\n```", 5).unwrap().0, 3);
        assert_eq!(parse_answer("{final_answer: 1,}", 5).unwrap().0, 1);
        assert_eq!(parse_answer("{'final_answer': '1. because'}", 5).unwrap().0, 1);
    }

    #[test]
    fn answer_takes_last_literal() {
        let raw = "{'final_answer': '1'} on reflection {'final_answer': '3'}";
        assert_eq!(parse_answer(raw, 5).unwrap().0, 3);
    }

    #[test]
    fn answer_errors() {
        assert_eq!(parse_answer("final answer is B", 5), Err(ParseError::NoLiteral("final_answer")));
        assert_eq!(
            parse_answer("{'final_answer': '7'}", 5),
            Err(ParseError::OutOfRange { index: 7, options: 5 })
        );
        assert!(matches!(parse_answer("{'final_answer': 'B'}", 5), Err(ParseError::BadValue { .. })));
        assert!(parse_answer("{'final_answer': '-1'}", 5).is_err());
    }

    #[test]
    fn confidence_values() {
        assert_eq!(parse_confidence("{'confidence': '3'}").unwrap(), Confidence::Sufficient);
        assert_eq!(parse_confidence("{\"confidence\": 2}").unwrap(), Confidence::Partial);
        // the prompt's own schema closes with a typographic quote
        assert_eq!(parse_confidence("{'confidence': '1\u{2019}}").unwrap(), Confidence::Insufficient);
        assert!(parse_confidence("{'confidence': '5'}").is_err());
        assert!(parse_confidence("confident!").is_err());
    }

    #[test]
    fn plan_validation() {
        let segs = partition_segments(&[1, 45, 90, 135, 180], 180).unwrap();
        let raw = "{'frame_descriptions': [{'segment_id': '1', 'duration': '1 - 45', 'description': 'frame of a'}, {'segment_id': '9', 'duration': 'x', 'description': 'frame of b'}, {'segment_id': 3, 'description': 'frame of c'}]}";
        let plan = parse_plan(raw, &segs, 5).unwrap();
        let got: Vec<_> = plan.items.iter().map(|i| (i.segment_id, i.query.as_str())).collect();
        assert_eq!(got, vec![(1, "frame of a"), (3, "frame of c")]);
    }

    #[test]
    fn plan_cap_keeps_first_items() {
        let segs = partition_segments(&[1, 180], 180).unwrap();
        let items: Vec<String> = (0..8)
            .map(|i| format!("{{'segment_id': '1', 'description': 'q{i}'}}"))
            .collect();
        let raw = format!("{{'frame_descriptions': [{}]}}", items.join(", "));
        let plan = parse_plan(&raw, &segs, 5).unwrap();
        let queries: Vec<_> = plan.items.iter().map(|i| i.query.as_str()).collect();
        assert_eq!(queries, vec!["q0", "q1", "q2", "q3", "q4"]);
    }

    #[test]
    fn plan_drops_empty_segments() {
        let segs = partition_segments(&[1, 2, 10], 10).unwrap();
        let raw = "{'frame_descriptions': [{'segment_id': '1', 'description': 'x'}, {'segment_id': '2', 'description': 'y'}]}";
        let plan = parse_plan(raw, &segs, 5).unwrap();
        assert_eq!(plan.items, vec![PlanItem { segment_id: 2, query: "y".into() }]);
    }

    #[test]
    fn plan_errors_without_list() {
        let segs = partition_segments(&[1, 10], 10).unwrap();
        assert!(parse_plan("nothing", &segs, 5).is_err());
        assert!(parse_plan("{'frame_descriptions': 'none'}", &segs, 5).is_err());
    }

    #[test]
    fn whole_video_plan_ignores_segment_ids() {
        let raw = "{'frame_descriptions': [{'description': 'a'}, {'segment_id': '7', 'description': 'b'}]}";
        let plan = parse_plan_whole_video(raw, 5).unwrap();
        assert!(plan.items.iter().all(|i| i.segment_id == 1));
        assert_eq!(plan.len(), 2);
    }

    #[test]
    fn deep_nesting_does_not_overflow() {
        let raw = format!("{}{{'confidence': 3}}", "[".repeat(100_000));
        assert_eq!(parse_confidence(&raw).unwrap(), Confidence::Sufficient);
        let raw = format!("{{'a': {}", "[".repeat(100_000));
        assert!(parse_confidence(&raw).is_err());
    }
}
