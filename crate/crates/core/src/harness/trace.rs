//! Episode traces: line-delimited JSON, one record per event.
//!
//! The first line is always a [`TraceRecord::Header`] and the last a
//! [`TraceRecord::Terminal`]. Within one tick the order is `tick`, optional
//! `summary`, `negotiation`, `allocation`, `step`, with `transcript` records
//! preceding the record they fed into.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coordination::{JointAction, Proposal};
use crate::ids::{AgentId, Tick};
use crate::reasoner::Transcript;
use crate::summary::Summary;
use crate::world::{ActionPrimitive, Event, TaskProgress};

use super::{EpisodeConfig, HarnessError};

pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    /// The manager's joint action was executed.
    Allocated,
    /// Every agent executed its own proposal.
    SelfExecuted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TraceRecord {
    Header {
        format_version: u32,
        template_version: String,
        catalog_version: u32,
        config: EpisodeConfig,
    },
    Tick {
        tick: Tick,
        /// Ground-truth progress.
        progress: TaskProgress,
        /// Progress evaluated on the merged team belief.
        team_progress: TaskProgress,
        observations: BTreeMap<AgentId, String>,
    },
    Summary {
        tick: Tick,
        summary: Summary,
    },
    Negotiation {
        tick: Tick,
        proposals: Vec<Proposal>,
    },
    Allocation {
        tick: Tick,
        mode: ExecutionMode,
        joint: JointAction,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        score: Option<i64>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        degraded: bool,
    },
    /// Primitives applied at `tick`; their effects are visible at `tick + 1`.
    Step {
        tick: Tick,
        actions: BTreeMap<AgentId, ActionPrimitive>,
        events: Vec<Event>,
    },
    Transcript {
        transcript: Transcript,
    },
    Terminal {
        success: bool,
        step_count: u64,
        progress: TaskProgress,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub records: Vec<TraceRecord>,
}

impl EpisodeTrace {
    pub fn config(&self) -> Option<&EpisodeConfig> {
        match self.records.first() {
            Some(TraceRecord::Header { config, .. }) => Some(config),
            _ => None,
        }
    }

    /// `(success, step_count)` from the terminal record.
    pub fn outcome(&self) -> Option<(bool, u64)> {
        match self.records.last() {
            Some(TraceRecord::Terminal { success, step_count, .. }) => Some((*success, *step_count)),
            _ => None,
        }
    }

    pub fn error(&self) -> Option<&str> {
        match self.records.last() {
            Some(TraceRecord::Terminal { error, .. }) => error.as_deref(),
            _ => None,
        }
    }

    pub fn steps(&self) -> impl Iterator<Item = (Tick, &BTreeMap<AgentId, ActionPrimitive>, &[Event])> {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Step { tick, actions, events } => Some((*tick, actions, events.as_slice())),
            _ => None,
        })
    }

    pub fn summaries(&self) -> impl Iterator<Item = &Summary> {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Summary { summary, .. } => Some(summary),
            _ => None,
        })
    }

    pub fn transcripts(&self) -> impl Iterator<Item = &Transcript> {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Transcript { transcript } => Some(transcript),
            _ => None,
        })
    }

    /// Ground-truth progress observed at each tick.
    pub fn progress(&self) -> impl Iterator<Item = (Tick, &TaskProgress)> {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Tick { tick, progress, .. } => Some((*tick, progress)),
            _ => None,
        })
    }

    pub fn allocations(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| matches!(r, TraceRecord::Allocation { .. }))
    }

    /// Every record except transcripts; what replay must reproduce.
    pub fn behavior(&self) -> Vec<&TraceRecord> {
        self.records
            .iter()
            .filter(|r| !matches!(r, TraceRecord::Transcript { .. } | TraceRecord::Header { .. }))
            .collect()
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_jsonl(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self, HarnessError> {
        let mut records = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| HarnessError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TraceRecord = serde_json::from_str(&line)
                .map_err(|e| HarnessError::Trace(format!("line {}: {e}", i + 1)))?;
            records.push(rec);
        }
        let trace = EpisodeTrace { records };
        match trace.records.first() {
            Some(TraceRecord::Header { format_version, .. }) if *format_version == TRACE_FORMAT_VERSION => {}
            Some(TraceRecord::Header { format_version, .. }) => {
                return Err(HarnessError::Trace(format!("unsupported trace format version {format_version}")))
            }
            _ => return Err(HarnessError::Trace("trace does not start with a header".into())),
        }
        Ok(trace)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let f = std::fs::File::open(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::read_jsonl(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let f = std::fs::File::create(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_jsonl(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
    }
}
