//! A scripted chat-completions server on a local socket, plus corpus and
//! config builders shared by the CLI tests.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

pub type Responder = dyn Fn(&str) -> (u16, String) + Send + Sync;

pub struct MockServer {
    pub base_url: String,
    requests: Arc<AtomicUsize>,
}

impl MockServer {
    /// Serves until the process exits. `respond` maps the user prompt to a
    /// status code and, for 200, the assistant message text.
    pub fn start(respond: impl Fn(&str) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base_url = format!("http://{}/v1", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let respond: Arc<Responder> = Arc::new(respond);
        let counter = requests.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let respond = respond.clone();
                let counter = counter.clone();
                thread::spawn(move || serve(stream, &*respond, &counter));
            }
        });
        MockServer { base_url, requests }
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, respond: &Responder, counter: &AtomicUsize) {
    let _ = stream.set_nodelay(true);
    let mut writer = stream.try_clone().unwrap();
    let mut reader = BufReader::new(stream);
    loop {
        let mut request_line = String::new();
        if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
            return;
        }
        let mut length = 0usize;
        loop {
            let mut line = String::new();
            if reader.read_line(&mut line).unwrap_or(0) == 0 {
                return;
            }
            let line = line.trim_end();
            if line.is_empty() {
                break;
            }
            if let Some((name, value)) = line.split_once(':') {
                if name.eq_ignore_ascii_case("content-length") {
                    length = value.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut body = vec![0; length];
        if reader.read_exact(&mut body).is_err() {
            return;
        }
        counter.fetch_add(1, Ordering::SeqCst);
        let request: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
        let prompt = request["messages"][0]["content"].as_str().unwrap_or_default();
        let (status, text) = respond(prompt);
        let payload = if status == 200 {
            serde_json::json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]})
                .to_string()
        } else {
            serde_json::json!({"error": {"message": text}}).to_string()
        };
        let response = format!(
            "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{payload}",
            payload.len()
        );
        if writer.write_all(response.as_bytes()).is_err() {
            return;
        }
    }
}

/// The note text of the context section of an extraction prompt.
pub fn context_of(prompt: &str) -> &str {
    let start = prompt.rfind("### Context:").map(|i| i + "### Context:".len()).unwrap_or(0);
    let rest = &prompt[start..];
    let end = rest.find("### Response:").unwrap_or(rest.len());
    rest[..end].trim()
}

/// A small gold corpus with `per_category` notes in each of five
/// categories. Note `n{i}` mentions marker word `note{i}`.
pub fn small_corpus(per_category: usize) -> String {
    let categories = ["Cancer", "COPD", "Diabetes", "Hypertension", "Heart Failure"];
    let mut out = String::new();
    let mut i = 0;
    for c in categories {
        for _ in 0..per_category {
            let line = serde_json::json!({
                "id": format!("n{i}"),
                "category": c,
                "text": format!("Discharge summary note{i}. Patient with {c}."),
                "terms": [
                    {"text": "heart failure", "major": 1},
                    {"text": "echocardiogram", "major": 1, "minor": 1},
                    {"text": "chronic kidney disease", "major": 2},
                    {"text": "furosemide", "major": 2, "minor": 1},
                    {"text": "atrial fibrillation", "major": 3},
                    {"text": "warfarin", "major": 4}
                ]
            });
            out.push_str(&line.to_string());
            out.push('\n');
            i += 1;
        }
    }
    out
}

pub fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

pub fn provider_toml(table: &str, name: &str, base_url: &str, key_env: &str) -> String {
    format!(
        "[{table}]\nname = \"{name}\"\nbase_url = \"{base_url}\"\nmodel = \"{name}-model\"\napi_key_env = \"{key_env}\"\nrequests_per_minute = 100000\ninitial_backoff_ms = 1\n"
    )
}

/// Path to the built `jargon` binary.
pub fn jargon_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_jargon"))
}
