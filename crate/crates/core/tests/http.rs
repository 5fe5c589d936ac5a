//! HTTP backends against a local one-request-per-connection server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use frameagent::captioner::{CaptionBackend, CaptionRequest, HttpCaptioner};
use frameagent::demo::dough_assets;
use frameagent::http::{HttpError, JsonClient, RetryPolicy};
use frameagent::llm::{ChatBackend, ChatMessage, ChatRequest, DecodingParams, LlmError, OpenAiChat, PromptKind};
use frameagent::retrieval::{HttpEmbedder, TextEmbedder};
use serde_json::{json, Value};

struct Seen {
    authorization: Option<String>,
    body: Value,
}

/// Serves `replies` (status, body) in order, one per connection, and reports
/// each request it read.
fn serve(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let (mut length, mut authorization) = (0, None);
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap_or((line, ""));
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => length = value.trim().parse().unwrap(),
                    "authorization" => authorization = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut raw = vec![0; length];
            reader.read_exact(&mut raw).unwrap();
            let _ = tx.send(Seen {
                authorization,
                body: serde_json::from_slice(&raw).unwrap_or(Value::Null),
            });
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

fn fast() -> RetryPolicy {
    RetryPolicy { max_retries: 3, base_delay_ms: 1, max_delay_ms: 4 }
}

fn chat_request() -> ChatRequest {
    ChatRequest {
        kind: PromptKind::Predict,
        round: 1,
        reask: 0,
        messages: vec![ChatMessage::user("which option?")],
        params: DecodingParams::default(),
    }
}

fn completion(content: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

#[test]
fn retries_server_errors_then_succeeds() {
    let (url, rx) = serve(vec![
        (500, "{}".into()),
        (500, "{}".into()),
        (200, completion("{'final_answer': '1'}")),
    ]);
    let chat = OpenAiChat::new(url, "m", Some("secret".into()), fast()).unwrap();
    let out = chat.complete(&chat_request()).unwrap();
    assert_eq!(out.text, "{'final_answer': '1'}");
    assert_eq!(out.attempts, 3);

    let first = rx.recv().unwrap();
    assert_eq!(first.authorization.as_deref(), Some("Bearer secret"));
    assert_eq!(first.body["model"], "m");
    assert_eq!(first.body["messages"][0], json!({"role": "user", "content": "which option?"}));
    assert_eq!(first.body["temperature"], 0.0);
}

#[test]
fn rate_limit_is_retried() {
    let (url, _rx) = serve(vec![(429, "{}".into()), (200, "{\"ok\": true}".into())]);
    let client = JsonClient::new(None, fast()).unwrap();
    let (value, attempts) = client.post(&url, &json!({})).unwrap();
    assert_eq!((value, attempts), (json!({"ok": true}), 2));
}

#[test]
fn auth_failure_is_not_retried() {
    let (url, rx) = serve(vec![(401, "{}".into()), (200, completion("unused"))]);
    let chat = OpenAiChat::new(url, "m", None, fast()).unwrap();
    let err = chat.complete(&chat_request()).unwrap_err();
    assert!(matches!(err, LlmError::Http(HttpError::Auth { status: 401 })), "{err:?}");
    rx.recv().unwrap();
    assert!(rx.try_recv().is_err(), "a second request was sent");
}

#[test]
fn gives_up_after_retry_budget() {
    let (url, _rx) = serve(vec![(503, "{}".into()); 4]);
    let client = JsonClient::new(None, fast()).unwrap();
    match client.post(&url, &json!({})) {
        Err(HttpError::Exhausted { attempts, .. }) => assert_eq!(attempts, 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn client_errors_are_returned_as_is() {
    let (url, _rx) = serve(vec![(400, "{\"error\": \"bad\"}".into())]);
    let client = JsonClient::new(None, fast()).unwrap();
    assert!(matches!(client.post(&url, &json!({})), Err(HttpError::Status { status: 400, .. })));
}

#[test]
fn response_without_content_is_rejected() {
    let (url, _rx) = serve(vec![(200, "{\"choices\": []}".into())]);
    let chat = OpenAiChat::new(url, "m", None, fast()).unwrap();
    assert!(matches!(chat.complete(&chat_request()), Err(LlmError::BadResponse)));
}

#[test]
fn embedder_contract() {
    let (url, rx) = serve(vec![(200, "{\"embeddings\": [[0.6, 0.8], [1.0, 0.0]]}".into())]);
    let embedder = HttpEmbedder::new(url, fast()).unwrap();
    let rows = embedder.embed(&["a".into(), "b".into()]).unwrap();
    assert_eq!(rows, vec![vec![0.6, 0.8], vec![1.0, 0.0]]);
    assert_eq!(rx.recv().unwrap().body, json!({"input": ["a", "b"]}));
}

#[test]
fn embedder_row_count_mismatch() {
    let (url, _rx) = serve(vec![(200, "{\"embeddings\": [[1.0]]}".into())]);
    let embedder = HttpEmbedder::new(url, fast()).unwrap();
    assert!(embedder.embed(&["a".into(), "b".into()]).is_err());
}

#[test]
fn captioner_contract() {
    let (url, rx) = serve(vec![(200, "{\"caption\": \"#C C kneads\"}".into())]);
    let captioner = HttpCaptioner::new(url, fast()).unwrap();
    let assets = dough_assets(4, 1);
    let caption = captioner.caption(&assets, &CaptionRequest::new(28, 2)).unwrap();
    assert_eq!(caption, "#C C kneads");
    assert_eq!(rx.recv().unwrap().body, json!({"video_id": "dough", "frame_index": 28, "window": 2}));
}

#[test]
fn captioner_rejects_out_of_range_frame_without_a_request() {
    let (url, rx) = serve(vec![]);
    let captioner = HttpCaptioner::new(url, fast()).unwrap();
    assert!(captioner.caption(&dough_assets(4, 1), &CaptionRequest::new(181, 0)).is_err());
    assert!(rx.try_recv().is_err());
}
