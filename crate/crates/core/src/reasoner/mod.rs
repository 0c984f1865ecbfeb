//! Pluggable reasoning backends for proposals, allocation and summaries.
//!
//! Every backend sees the same [`ReasonerRequest`] and answers in the same
//! fenced text grammar, so heuristic, scripted and remote runs are
//! interchangeable and remote transcripts can be replayed offline.

mod grammar;
mod heuristic;
mod prompt;
mod remote;
mod scripted;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coordination::{AgentView, CrossAgentContext, JointAction, Proposal};
use crate::agent::HistoryRecord;
use crate::ids::{AgentId, Tick};
use crate::summary::CollaborativeSummary;
use crate::world::{GoalSpec, TaskProgress};

pub use grammar::{
    parse_allocation, parse_proposal, parse_response, parse_summary, render_allocation_response,
    render_proposal_response, render_summary_response, GrammarError,
};
pub use heuristic::HeuristicReasoner;
pub use prompt::render_prompt;
pub use remote::{RemoteConfig, RemoteReasoner, API_KEY_ENV};
pub use scripted::{FixtureRecord, ScriptedReasoner};

pub const TEMPLATE_VERSION: &str = "template_v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RequestKind {
    Propose,
    Allocate,
    Summarize,
}

impl RequestKind {
    pub fn name(self) -> &'static str {
        match self {
            RequestKind::Propose => "PROPOSE",
            RequestKind::Allocate => "ALLOCATE",
            RequestKind::Summarize => "SUMMARIZE",
        }
    }
}

impl fmt::Display for RequestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RequestKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "PROPOSE" => Ok(RequestKind::Propose),
            "ALLOCATE" => Ok(RequestKind::Allocate),
            "SUMMARIZE" => Ok(RequestKind::Summarize),
            _ => Err(format!("unknown request kind '{s}'")),
        }
    }
}

/// Per-call limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    /// Retries after the first attempt.
    pub max_retries: u32,
    #[serde(with = "millis")]
    pub timeout: Duration,
    pub max_tokens: u32,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_retries: 2, timeout: Duration::from_secs(60), max_tokens: 512 }
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

/// Prompt template set. Few-shot examples are appended verbatim under an
/// "Examples" section of requests of the matching kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Templates {
    pub version: String,
    #[serde(default)]
    pub few_shot: Vec<(RequestKind, String)>,
}

impl Default for Templates {
    fn default() -> Self {
        Self { version: TEMPLATE_VERSION.to_string(), few_shot: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct AllocatePayload {
    pub context: CrossAgentContext,
    pub summary: CollaborativeSummary,
    pub progress: TaskProgress,
    pub goal: GoalSpec,
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct SummarizePayload {
    pub records: Vec<HistoryRecord>,
    pub delta: i64,
    pub lower: Tick,
    pub upper: Tick,
    pub goal: GoalSpec,
}

#[derive(Debug, Clone)]
pub enum Payload {
    Propose(AgentView),
    Allocate(AllocatePayload),
    Summarize(SummarizePayload),
}

impl Payload {
    pub fn kind(&self) -> RequestKind {
        match self {
            Payload::Propose(_) => RequestKind::Propose,
            Payload::Allocate(_) => RequestKind::Allocate,
            Payload::Summarize(_) => RequestKind::Summarize,
        }
    }
}

/// One reasoning call. `(kind, tick, agent)` identifies it within an episode.
#[derive(Debug)]
pub struct ReasonerRequest {
    pub tick: Tick,
    pub agent: AgentId,
    pub payload: Payload,
    pub templates: Templates,
    pub budget: Budget,
    prompt: OnceLock<String>,
}

impl ReasonerRequest {
    pub fn new(tick: Tick, agent: AgentId, payload: Payload, templates: Templates, budget: Budget) -> Self {
        Self { tick, agent, payload, templates, budget, prompt: OnceLock::new() }
    }

    pub fn kind(&self) -> RequestKind {
        self.payload.kind()
    }

    /// Rendered on first use; backends that never read it never pay for it.
    pub fn prompt(&self) -> &str {
        self.prompt.get_or_init(|| render_prompt(self))
    }

    pub fn prompt_sha256(&self) -> String {
        hex::encode(Sha256::digest(self.prompt().as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    Proposal(Proposal),
    Joint(JointAction),
    Summary(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReasonerResponse {
    pub raw_text: String,
    pub parsed: Option<Parsed>,
    pub parse_error: Option<String>,
    pub degraded: bool,
    pub latency: Option<Duration>,
    pub prompt_tokens: Option<u32>,
    pub completion_tokens: Option<u32>,
}

impl ReasonerResponse {
    /// Parses `raw_text` against the request's grammar.
    pub fn from_text(request: &ReasonerRequest, raw_text: String) -> Self {
        let (parsed, parse_error) = match parse_response(request, &raw_text) {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            raw_text,
            parsed,
            parse_error,
            degraded: false,
            latency: None,
            prompt_tokens: None,
            completion_tokens: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReasonerError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    /// A recorded failure played back verbatim.
    #[error("{0}")]
    Replayed(String),
    #[error("no fixture left for {kind} at tick {tick} agent {agent}")]
    FixtureExhausted { kind: RequestKind, tick: Tick, agent: AgentId },
}

pub trait Reasoner: Send + Sync {
    fn name(&self) -> &str;

    fn invoke(&self, request: &ReasonerRequest) -> Result<ReasonerResponse, ReasonerError>;

    /// Whether calls should be persisted into the episode trace.
    fn records_transcripts(&self) -> bool {
        true
    }

    fn transcript(
        &self,
        request: &ReasonerRequest,
        attempt: u32,
        result: &Result<ReasonerResponse, ReasonerError>,
    ) -> Transcript {
        Transcript::from_result(request, attempt, result)
    }
}

/// Persisted record of one reasoning attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub kind: RequestKind,
    pub tick: Tick,
    pub agent: AgentId,
    pub attempt: u32,
    pub prompt_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
}

impl Transcript {
    pub fn from_result(
        request: &ReasonerRequest,
        attempt: u32,
        result: &Result<ReasonerResponse, ReasonerError>,
    ) -> Self {
        let (response_text, parse_error, error, latency_ms) = match result {
            Ok(r) => (
                Some(r.raw_text.clone()),
                r.parse_error.clone(),
                None,
                r.latency.map(|d| d.as_millis() as u64),
            ),
            Err(e) => (None, None, Some(e.to_string()), None),
        };
        Self {
            kind: request.kind(),
            tick: request.tick,
            agent: request.agent,
            attempt,
            prompt_sha256: request.prompt_sha256(),
            prompt: None,
            response_text,
            parse_error,
            error,
            latency_ms,
        }
    }
}
