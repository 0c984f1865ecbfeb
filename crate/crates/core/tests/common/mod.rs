//! Helpers shared by the integration tests: a local chat-completions stub.
#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use serde_json::{json, Value};

/// Counters of what the stub has answered.
#[derive(Debug, Default)]
pub struct StubStats {
    pub requests: AtomicUsize,
    pub malformed: AtomicUsize,
    pub authorized: AtomicUsize,
}

/// A chat-completions endpoint on 127.0.0.1 that answers deterministically
/// from the prompt alone:
///
/// - ALLOCATE: echoes the first listed option of every agent;
/// - SUMMARIZE: a short summary naming the interval;
/// - PROPOSE: `Idle()` with no alternatives.
///
/// Allocation prompts at ticks `t % 5 == 2` get one malformed answer before
/// the real one; at ticks `t % 7 == 3` every answer is malformed.
pub struct StubServer {
    pub url: String,
    pub stats: Arc<StubStats>,
}

impl StubServer {
    pub fn start() -> StubServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let stats = Arc::new(StubStats::default());
        let seen: Arc<Mutex<HashMap<String, usize>>> = Arc::default();
        let st = stats.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (st, seen) = (st.clone(), seen.clone());
                thread::spawn(move || {
                    let _ = serve(stream, &st, &seen);
                });
            }
        });
        StubServer { url, stats }
    }

    pub fn requests(&self) -> usize {
        self.stats.requests.load(Ordering::SeqCst)
    }

    pub fn malformed(&self) -> usize {
        self.stats.malformed.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, stats: &StubStats, seen: &Mutex<HashMap<String, usize>>) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut len = 0usize;
    let mut auth = false;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let lower = line.to_ascii_lowercase();
        if let Some(v) = lower.strip_prefix("content-length:") {
            len = v.trim().parse().unwrap_or(0);
        }
        auth |= lower.starts_with("authorization: bearer ");
        if line == "\r\n" {
            break;
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body)?;
    let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let prompt = request.pointer("/messages/1/content").and_then(Value::as_str).unwrap_or("").to_string();
    stats.requests.fetch_add(1, Ordering::SeqCst);
    if auth {
        stats.authorized.fetch_add(1, Ordering::SeqCst);
    }
    let attempt = {
        let mut seen = seen.lock().unwrap();
        let n = seen.entry(prompt.clone()).or_insert(0);
        *n += 1;
        *n
    };
    let content = answer(&prompt, attempt).unwrap_or_else(|| {
        stats.malformed.fetch_add(1, Ordering::SeqCst);
        "Sorry, I am not able to help with that.".to_string()
    });
    let reply = json!({
        "id": "stub",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
        "usage": {"prompt_tokens": prompt.len() / 4, "completion_tokens": content.len() / 4},
    })
    .to_string();
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
        reply.len()
    )?;
    stream.flush()
}

fn header_field<'a>(prompt: &'a str, key: &str) -> Option<&'a str> {
    prompt.lines().next()?.split_whitespace().find_map(|w| w.strip_prefix(key))
}

/// `None` means "answer with something unparseable".
fn answer(prompt: &str, attempt: usize) -> Option<String> {
    let kind = prompt.lines().next()?.strip_prefix("# ")?.split_whitespace().next()?;
    let tick: u64 = header_field(prompt, "tick=")?.parse().ok()?;
    match kind {
        "ALLOCATE" => {
            if tick % 7 == 3 || (tick % 5 == 2 && attempt == 1) {
                return None;
            }
            let mut out = String::from("Here is the assignment.\n```allocation\n");
            let mut agent = None;
            for line in prompt.lines() {
                if let Some(a) = line.strip_prefix("### Agent ") {
                    agent = Some(a.trim().to_string());
                } else if let (Some(a), Some(opts)) = (&agent, line.strip_prefix("options: ")) {
                    out.push_str(&format!("agent {a}: {}\n", opts.split(" | ").next()?));
                    agent = None;
                }
            }
            out.push_str("```\n");
            Some(out)
        }
        "SUMMARIZE" => {
            let interval = prompt.lines().find(|l| l.starts_with("ticks ("))?;
            Some(format!("```summary\nstub summary of {interval}\n```"))
        }
        "PROPOSE" => Some("```proposal\ncandidate: Idle()\nrationale: stub\n```".into()),
        _ => None,
    }
}
