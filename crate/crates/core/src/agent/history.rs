use serde::{Deserialize, Serialize};

use crate::ids::{AgentId, Tick};
use crate::world::{ActionPrimitive, Event};

/// What one agent did at one tick. `tick` is the tick the action's effects became visible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub tick: Tick,
    pub agent: AgentId,
    pub action: ActionPrimitive,
    pub events: Vec<Event>,
    pub belief_digest: String,
}

/// Append-only joint history ordered by (tick, agent).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct History {
    records: Vec<HistoryRecord>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends, rejecting anything not strictly after the last record.
    pub fn push(&mut self, record: HistoryRecord) -> Result<(), String> {
        if let Some(last) = self.records.last() {
            if (record.tick, record.agent) <= (last.tick, last.agent) {
                return Err(format!(
                    "history out of order: ({}, {}) after ({}, {})",
                    record.tick, record.agent, last.tick, last.agent
                ));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[HistoryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records with `lower < tick <= upper`, in order.
    pub fn between(&self, lower: Tick, upper: Tick) -> &[HistoryRecord] {
        let start = self.records.partition_point(|r| r.tick <= lower);
        let end = self.records.partition_point(|r| r.tick <= upper);
        &self.records[start..end.max(start)]
    }

    /// One agent's records after `since`, keeping at most the last `limit`.
    pub fn window(&self, agent: AgentId, since: Tick, limit: Option<usize>) -> Vec<HistoryRecord> {
        let mine: Vec<&HistoryRecord> = self.records[self.records.partition_point(|r| r.tick <= since)..]
            .iter()
            .filter(|r| r.agent == agent)
            .collect();
        let skip = limit.map_or(0, |l| mine.len().saturating_sub(l));
        mine.into_iter().skip(skip).cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(tick: Tick, agent: u32) -> HistoryRecord {
        HistoryRecord {
            tick,
            agent: AgentId(agent),
            action: ActionPrimitive::Wait,
            events: vec![],
            belief_digest: String::new(),
        }
    }

    #[test]
    fn ordering_is_enforced() {
        let mut h = History::new();
        h.push(rec(1, 1)).unwrap();
        h.push(rec(1, 2)).unwrap();
        assert!(h.push(rec(1, 2)).is_err());
        assert!(h.push(rec(1, 1)).is_err());
        h.push(rec(2, 1)).unwrap();
        assert_eq!(h.len(), 3);
    }

    #[test]
    fn window_and_between() {
        let mut h = History::new();
        for t in 1..=6 {
            for a in 1..=2 {
                h.push(rec(t, a)).unwrap();
            }
        }
        assert_eq!(h.between(3, 5).len(), 4);
        assert_eq!(h.between(5, 5).len(), 0);
        let w = h.window(AgentId(2), 2, None);
        assert_eq!(w.iter().map(|r| r.tick).collect::<Vec<_>>(), vec![3, 4, 5, 6]);
        assert_eq!(h.window(AgentId(2), 0, Some(2)).len(), 2);
    }
}
