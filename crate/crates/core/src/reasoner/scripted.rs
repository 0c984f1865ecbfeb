use std::collections::{BTreeMap, VecDeque};
use std::io::BufRead;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::ids::{AgentId, Tick};

use super::{Reasoner, ReasonerError, ReasonerRequest, ReasonerResponse, RequestKind, Transcript};

/// One canned answer. A present `error` replays as a transport failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub kind: RequestKind,
    pub tick: Tick,
    pub agent: AgentId,
    #[serde(default)]
    pub response_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&Transcript> for FixtureRecord {
    fn from(t: &Transcript) -> Self {
        Self {
            kind: t.kind,
            tick: t.tick,
            agent: t.agent,
            response_text: t.response_text.clone().unwrap_or_default(),
            error: t.error.clone(),
        }
    }
}

type Key = (RequestKind, Tick, AgentId);

/// Answers from fixtures keyed by `(kind, tick, agent)`; repeated keys are
/// consumed in order, one per attempt.
#[derive(Debug, Default)]
pub struct ScriptedReasoner {
    queue: Mutex<BTreeMap<Key, VecDeque<FixtureRecord>>>,
}

impl ScriptedReasoner {
    pub fn new(records: impl IntoIterator<Item = FixtureRecord>) -> Self {
        let mut map: BTreeMap<Key, VecDeque<FixtureRecord>> = BTreeMap::new();
        for r in records {
            map.entry((r.kind, r.tick, r.agent)).or_default().push_back(r);
        }
        Self { queue: Mutex::new(map) }
    }

    pub fn from_transcripts<'a>(transcripts: impl IntoIterator<Item = &'a Transcript>) -> Self {
        Self::new(transcripts.into_iter().map(FixtureRecord::from))
    }

    /// Reads JSONL fixtures; blank lines are skipped.
    pub fn from_jsonl(reader: impl BufRead) -> std::io::Result<Self> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: FixtureRecord = serde_json::from_str(&line).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("fixture line {}: {e}", i + 1))
            })?;
            records.push(r);
        }
        Ok(Self::new(records))
    }

    pub fn from_path(path: &Path) -> std::io::Result<Self> {
        Self::from_jsonl(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Fixtures not consumed so far.
    pub fn remaining(&self) -> usize {
        self.queue.lock().unwrap().values().map(VecDeque::len).sum()
    }
}

impl Reasoner for ScriptedReasoner {
    fn name(&self) -> &str {
        "scripted"
    }

    fn invoke(&self, request: &ReasonerRequest) -> Result<ReasonerResponse, ReasonerError> {
        let key = (request.kind(), request.tick, request.agent);
        let record = self
            .queue
            .lock()
            .unwrap()
            .get_mut(&key)
            .and_then(VecDeque::pop_front)
            .ok_or(ReasonerError::FixtureExhausted { kind: key.0, tick: key.1, agent: key.2 })?;
        match record.error {
            Some(e) => Err(ReasonerError::Replayed(e)),
            None => Ok(ReasonerResponse::from_text(request, record.response_text)),
        }
    }
}
