//! OpenAI-compatible chat-completions backend.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Reasoner, ReasonerError, ReasonerRequest, ReasonerResponse, Transcript};

/// Environment variable holding the bearer token. The key is never read from
/// configuration files.
pub const API_KEY_ENV: &str = "HOUSEMIND_API_KEY";

const SYSTEM_PROMPT: &str = "You coordinate a team of household robots. Follow the response format exactly.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Full chat-completions URL, e.g. `http://localhost:8000/v1/chat/completions`.
    pub endpoint_url: String,
    pub model: String,
    /// Extra attempts on transport errors, before the caller's own retries.
    pub transport_retries: u32,
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "default".into(),
            transport_retries: 1,
            max_in_flight: 4,
        }
    }
}

/// Counting semaphore bounding concurrent HTTP calls across episodes.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug)]
pub struct RemoteReasoner {
    config: RemoteConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
    slots: Slots,
}

impl RemoteReasoner {
    /// Reads the API key from [`API_KEY_ENV`]; a missing key sends no auth header.
    pub fn new(config: RemoteConfig) -> Self {
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: RemoteConfig, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        let slots = Slots { free: Mutex::new(config.max_in_flight.max(1)), cv: Condvar::new() };
        Self { config, api_key, agent, slots }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn call_once(&self, request: &ReasonerRequest) -> Result<(Value, Duration), ReasonerError> {
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "max_tokens": request.budget.max_tokens,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": request.prompt()},
            ],
        });
        let _slot = self.slots.acquire();
        let started = Instant::now();
        let mut req = self
            .agent
            .post(&self.config.endpoint_url)
            .config()
            .timeout_global(Some(request.budget.timeout))
            .build();
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| match e {
            ureq::Error::Timeout(_) => ReasonerError::Timeout(request.budget.timeout),
            other => ReasonerError::Transport(other.to_string()),
        })?;
        let status = resp.status();
        let value: Value = resp.body_mut().read_json().map_err(|e| match e {
            ureq::Error::Timeout(_) => ReasonerError::Timeout(request.budget.timeout),
            other => ReasonerError::Transport(format!("HTTP {status}: unreadable body: {other}")),
        })?;
        if !status.is_success() {
            return Err(ReasonerError::Transport(format!("HTTP {status}: {value}")));
        }
        Ok((value, started.elapsed()))
    }
}

impl Reasoner for RemoteReasoner {
    fn name(&self) -> &str {
        "remote"
    }

    fn invoke(&self, request: &ReasonerRequest) -> Result<ReasonerResponse, ReasonerError> {
        let mut attempt = 0;
        let (value, latency) = loop {
            match self.call_once(request) {
                Ok(v) => break v,
                Err(ReasonerError::Transport(_)) if attempt < self.config.transport_retries => {
                    attempt += 1;
                    thread::sleep(Duration::from_millis(100 * u64::from(attempt)));
                }
                Err(e) => return Err(e),
            }
        };
        let text = value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| ReasonerError::Transport(format!("no message content in response: {value}")))?;
        let token = |p: &str| value.pointer(p).and_then(Value::as_u64).map(|n| n as u32);
        let mut resp = ReasonerResponse::from_text(request, text.to_string());
        resp.latency = Some(latency);
        resp.prompt_tokens = token("/usage/prompt_tokens");
        resp.completion_tokens = token("/usage/completion_tokens");
        Ok(resp)
    }

    fn transcript(
        &self,
        request: &ReasonerRequest,
        attempt: u32,
        result: &Result<ReasonerResponse, ReasonerError>,
    ) -> Transcript {
        Transcript { prompt: Some(request.prompt().to_string()), ..Transcript::from_result(request, attempt, result) }
    }
}
