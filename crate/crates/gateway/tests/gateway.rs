use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use jargon_gateway::{
    ChatRequest, Clock, Gateway, GatewayError, ManualClock, ProviderConfig, ResponseCache, Transport, TransportError,
};

fn config() -> ProviderConfig {
    let mut c = ProviderConfig::new("mock", "http://127.0.0.1:9/v1", "mock-model", "JARGON_TEST_UNSET_KEY");
    c.initial_backoff_ms = 1000;
    c
}

/// Replays a fixed sequence of outcomes, then answers with the prompt echoed.
struct Scripted {
    script: Mutex<VecDeque<Result<String, TransportError>>>,
    calls: AtomicUsize,
}

impl Scripted {
    fn new(script: Vec<Result<String, TransportError>>) -> Self {
        Self {
            script: Mutex::new(script.into()),
            calls: AtomicUsize::new(0),
        }
    }
}

impl Transport for Scripted {
    fn send(&self, _endpoint: &str, _key: &str, request: &ChatRequest<'_>) -> Result<String, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match self.script.lock().unwrap().pop_front() {
            Some(r) => r,
            None => Ok(format!("echo: {}", request.messages[0].content)),
        }
    }
}

fn status(code: u16) -> Result<String, TransportError> {
    Err(TransportError::Status {
        code,
        body: "slow down".into(),
    })
}

fn gateway(script: Vec<Result<String, TransportError>>, clock: Arc<ManualClock>) -> Gateway {
    Gateway::new(config(), Arc::new(ResponseCache::in_memory()))
        .unwrap()
        .with_transport(Scripted::new(script))
        .with_clock(clock)
        .with_api_key("test-key")
}

#[test]
fn retries_transient_errors_with_growing_backoff() {
    let clock = Arc::new(ManualClock::default());
    let gw = gateway(vec![status(429), status(429), Ok("1. gerd".into())], clock.clone());
    let c = gw.complete("prompt").unwrap();
    assert_eq!(c.text, "1. gerd");
    assert_eq!(c.attempts, 3);
    assert!(!c.cached);
    assert_eq!(gw.network_calls(), 3);
    let sleeps = clock.sleeps();
    assert_eq!(sleeps.len(), 2);
    assert!(sleeps[0] >= Duration::from_millis(1000) && sleeps[0] <= Duration::from_millis(1250));
    assert!(sleeps[1] >= Duration::from_millis(2000) && sleeps[1] <= Duration::from_millis(2500));
}

#[test]
fn gives_up_after_max_attempts() {
    let clock = Arc::new(ManualClock::default());
    let gw = gateway(vec![status(503); 10], clock);
    match gw.complete("prompt") {
        Err(GatewayError::ExhaustedRetries { attempts, status, .. }) => {
            assert_eq!(attempts, 5);
            assert_eq!(status, Some(503));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(gw.network_calls(), 5);
}

#[test]
fn client_errors_are_not_retried() {
    let clock = Arc::new(ManualClock::default());
    let gw = gateway(vec![status(400)], clock.clone());
    assert!(matches!(
        gw.complete("prompt"),
        Err(GatewayError::ProviderRejected { status: 400, .. })
    ));
    assert_eq!(gw.network_calls(), 1);
    assert!(clock.sleeps().is_empty());
}

#[test]
fn cache_hit_makes_no_request() {
    let clock = Arc::new(ManualClock::default());
    let gw = gateway(vec![], clock);
    let first = gw.complete("same prompt").unwrap();
    let second = gw.complete("same prompt").unwrap();
    assert_eq!(first.text, second.text);
    assert!(second.cached);
    assert_eq!(second.attempts, 0);
    assert_eq!(gw.network_calls(), 1);
}

#[test]
fn persistent_cache_serves_a_new_gateway_without_credentials() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.jsonl");
    {
        let gw = Gateway::new(config(), Arc::new(ResponseCache::open(&path).unwrap()))
            .unwrap()
            .with_transport(Scripted::new(vec![]))
            .with_api_key("k");
        gw.complete("p1").unwrap();
    }
    let gw = Gateway::new(config(), Arc::new(ResponseCache::open(&path).unwrap()))
        .unwrap()
        .with_transport(Scripted::new(vec![status(500)]));
    let c = gw.complete("p1").unwrap();
    assert_eq!(c.text, "echo: p1");
    assert!(c.cached);
    assert_eq!(gw.network_calls(), 0);
    assert!(matches!(gw.complete("p2"), Err(GatewayError::AuthMissing { .. })));
    assert_eq!(gw.network_calls(), 0);
}

#[test]
fn empty_prompt_is_rejected() {
    let gw = gateway(vec![], Arc::new(ManualClock::default()));
    assert_eq!(gw.complete("  \n"), Err(GatewayError::EmptyPrompt));
}

#[test]
fn rate_limit_holds_under_manual_clock() {
    let clock = Arc::new(ManualClock::default());
    let mut cfg = config();
    cfg.requests_per_minute = 2;
    let gw = Gateway::new(cfg, Arc::new(ResponseCache::in_memory()))
        .unwrap()
        .with_transport(Scripted::new(vec![]))
        .with_clock(clock.clone())
        .with_api_key("k");
    for i in 0..5 {
        gw.complete(&format!("p{i}")).unwrap();
    }
    assert_eq!(clock.sleeps().len(), 2);
    assert_eq!(clock.now(), Duration::from_secs(120));
}

/// Sleeps per request and tracks how many requests overlap.
struct Slow {
    in_flight: AtomicUsize,
    peak: AtomicUsize,
    calls: AtomicUsize,
}

impl Transport for Slow {
    fn send(&self, _endpoint: &str, _key: &str, request: &ChatRequest<'_>) -> Result<String, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        std::thread::sleep(Duration::from_millis(15));
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        let prompt = request.messages[0].content;
        if prompt == "p3" {
            return Err(TransportError::Status {
                code: 422,
                body: "bad".into(),
            });
        }
        Ok(prompt.to_uppercase())
    }
}

#[test]
fn batch_bounds_parallelism_and_keeps_order() {
    let slow = Arc::new(Slow {
        in_flight: AtomicUsize::new(0),
        peak: AtomicUsize::new(0),
        calls: AtomicUsize::new(0),
    });
    struct Shared(Arc<Slow>);
    impl Transport for Shared {
        fn send(&self, e: &str, k: &str, r: &ChatRequest<'_>) -> Result<String, TransportError> {
            self.0.send(e, k, r)
        }
    }
    let mut cfg = config();
    cfg.requests_per_minute = 10_000;
    let gw = Gateway::new(cfg, Arc::new(ResponseCache::in_memory()))
        .unwrap()
        .with_transport(Shared(slow.clone()))
        .with_api_key("k")
        .with_parallelism(3);
    let prompts: Vec<String> = (0..12).map(|i| format!("p{}", i % 10)).collect();
    let results = gw.run_batch(&prompts);
    assert_eq!(results.len(), 12);
    for (i, r) in results.iter().enumerate() {
        if i % 10 == 3 {
            assert!(matches!(r, Err(GatewayError::ProviderRejected { status: 422, .. })));
        } else {
            assert_eq!(r.as_ref().unwrap().text, format!("P{}", i % 10));
        }
    }
    assert_eq!(slow.calls.load(Ordering::SeqCst), 10);
    let peak = slow.peak.load(Ordering::SeqCst);
    assert!(peak <= 3, "peak {peak}");
    assert!(peak >= 2, "requests never overlapped");
}

#[test]
fn one_failure_does_not_abort_the_batch() {
    let clock = Arc::new(ManualClock::default());
    let gw = gateway(vec![status(401)], clock).with_parallelism(1);
    let prompts = ["a", "b", "c", "d", "e"];
    let results = gw.run_batch(&prompts);
    assert_eq!(results.iter().filter(|r| r.is_err()).count(), 1);
    assert!(results[0].is_err());
    assert_eq!(results[4].as_ref().unwrap().text, "echo: e");
}

#[test]
fn http_wire_format() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let server = std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut request_line = String::new();
        reader.read_line(&mut request_line).unwrap();
        let mut headers = Vec::new();
        let mut length = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line == "\r\n" {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            headers.push(line.trim_end().to_string());
        }
        let mut body = vec![0; length];
        reader.read_exact(&mut body).unwrap();
        let reply = r#"{"choices":[{"message":{"role":"assistant","content":"1. copd"}}]}"#;
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
            reply.len(),
            reply
        )
        .unwrap();
        (request_line, headers, String::from_utf8(body).unwrap())
    });

    let mut cfg = config();
    cfg.base_url = format!("http://127.0.0.1:{port}/v1");
    cfg.max_tokens = 256;
    let gw = Gateway::new(cfg, Arc::new(ResponseCache::in_memory()))
        .unwrap()
        .with_api_key("sk-test");
    let c = gw.complete("hello").unwrap();
    assert_eq!(c.text, "1. copd");

    let (request_line, headers, body) = server.join().unwrap();
    assert_eq!(request_line.trim_end(), "POST /v1/chat/completions HTTP/1.1");
    assert!(headers.iter().any(|h| h.eq_ignore_ascii_case("authorization: Bearer sk-test")));
    let body: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(
        body,
        serde_json::json!({
            "model": "mock-model",
            "messages": [{"role": "user", "content": "hello"}],
            "temperature": 0.0,
            "max_tokens": 256
        })
    );
}
