//! Progress-triggered episodic memory integration.
//!
//! Whenever evaluated task progress differs from the value at the previous
//! summary, the joint history since that summary is condensed into one
//! [`Summary`] and appended to the [`CollaborativeSummary`]. Summary
//! intervals are half-open below, `(t_last, t]`, so consecutive summaries
//! tile the episode without gaps or overlaps.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::agent::{History, HistoryRecord};
use crate::ids::{AgentId, Tick};
use crate::reasoner::{
    Budget, Parsed, Payload, Reasoner, ReasonerRequest, SummarizePayload, Templates,
    Transcript,
};
use crate::world::{Event, GoalSpec, TaskProgress};

/// Character budget for one templated summary.
pub const SUMMARY_BUDGET: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SummaryError {
    #[error("contract violation: {0}")]
    Contract(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub index: u32,
    /// Exclusive lower bound of the covered ticks.
    pub lower: Tick,
    /// Inclusive upper bound of the covered ticks.
    pub upper: Tick,
    pub delta_progress: i64,
    pub text: String,
    pub source_record_count: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degraded: bool,
}

/// Ordered, interval-adjacent summaries.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollaborativeSummary {
    summaries: Vec<Summary>,
}

impl CollaborativeSummary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn summaries(&self) -> &[Summary] {
        &self.summaries
    }

    pub fn len(&self) -> usize {
        self.summaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }

    /// Upper bound of the last summary, or 0.
    pub fn covered_until(&self) -> Tick {
        self.summaries.last().map_or(0, |s| s.upper)
    }

    /// Appends `s`, which must start where the collection ends and carry the next index.
    pub fn append(&mut self, s: Summary) -> Result<(), SummaryError> {
        let expected_lower = self.covered_until();
        if s.lower != expected_lower {
            return Err(SummaryError::Contract(format!(
                "summary interval ({}, {}] does not start at {expected_lower}",
                s.lower, s.upper
            )));
        }
        if s.upper <= s.lower {
            return Err(SummaryError::Contract(format!("empty interval ({}, {}]", s.lower, s.upper)));
        }
        let expected_index = self.summaries.len() as u32 + 1;
        if s.index != expected_index {
            return Err(SummaryError::Contract(format!(
                "summary index {} (expected {expected_index})",
                s.index
            )));
        }
        if s.delta_progress == 0 {
            return Err(SummaryError::Contract("summary with zero progress change".into()));
        }
        self.summaries.push(s);
        Ok(())
    }

    /// Prompt rendering, most recent first.
    pub fn render(&self) -> String {
        if self.summaries.is_empty() {
            return "(no summaries yet)\n".to_string();
        }
        let mut out = String::new();
        for s in self.summaries.iter().rev() {
            let _ = writeln!(out, "[{}] ({}, {}] dp={:+}: {}", s.index, s.lower, s.upper, s.delta_progress, s.text);
        }
        out
    }
}

/// True iff satisfied counts differ, in either direction.
pub fn detect_change(now: &TaskProgress, last: &TaskProgress) -> bool {
    now.satisfied != last.satisfied
}

/// Records with `t_last < tick <= t`.
pub fn slice_history(history: &History, t_last: Tick, t: Tick) -> Result<&[HistoryRecord], SummaryError> {
    if t_last >= t {
        return Err(SummaryError::Contract(format!("inverted history bounds ({t_last}, {t}]")));
    }
    Ok(history.between(t_last, t))
}

fn truncate_chars(s: &mut String, max: usize) {
    if let Some((idx, _)) = s.char_indices().nth(max) {
        s.truncate(idx);
    }
}

/// Deterministic digest of an interval: goal units placed or removed, per-agent
/// activity, net change, conflicts and failures. At most [`SUMMARY_BUDGET`] characters.
pub fn templated_digest(records: &[HistoryRecord], delta: i64, lower: Tick, upper: Tick, goal: &GoalSpec) -> String {
    let mut placed = Vec::new();
    let mut removed = Vec::new();
    let mut conflicts = Vec::new();
    let mut failures = 0usize;
    let mut activity: BTreeMap<AgentId, (usize, usize, usize, usize)> = BTreeMap::new();
    for r in records {
        let act = activity.entry(r.agent).or_default();
        for e in &r.events {
            match e {
                Event::Moved { .. } => act.0 += 1,
                Event::Grabbed { agent, object, class, from, .. } => {
                    act.1 += 1;
                    if let Some(p) = goal.predicates.iter().find(|p| p.matches(class, from)) {
                        removed.push(format!("agent {agent} took {object} from {} {}", p.relation, p.target));
                    }
                }
                Event::Placed { agent, object, class, to } => {
                    act.2 += 1;
                    if let Some(p) = goal.predicates.iter().find(|p| p.matches(class, to)) {
                        placed.push(format!("agent {agent} put {object} {} {}", p.relation, p.target));
                    }
                }
                Event::Opened { .. } | Event::Closed { .. } | Event::Explored { .. } => act.3 += 1,
                Event::Conflict { agent, action, winner } => {
                    conflicts.push(format!("t{} agent {agent} lost {action} to agent {winner}", r.tick));
                }
                Event::Failure { .. } => failures += 1,
                Event::Waited { .. } => {}
            }
        }
    }
    let mut out = format!("({lower}, {upper}] progress {delta:+}.");
    if !placed.is_empty() {
        let _ = write!(out, " placed: {}.", placed.join(", "));
    }
    if !removed.is_empty() {
        let _ = write!(out, " removed: {}.", removed.join(", "));
    }
    let acts: Vec<String> = activity
        .iter()
        .map(|(a, (m, g, p, o))| format!("agent {a} moves {m} grabs {g} puts {p} other {o}"))
        .collect();
    if !acts.is_empty() {
        let _ = write!(out, " activity: {}.", acts.join("; "));
    }
    if !conflicts.is_empty() {
        let _ = write!(out, " conflicts: {}.", conflicts.join(", "));
    }
    if failures > 0 {
        let _ = write!(out, " failures: {failures}.");
    }
    truncate_chars(&mut out, SUMMARY_BUDGET);
    out
}

/// Result of one summarization, including any transcripts to persist.
#[derive(Debug, Clone)]
pub struct SummarizeOutcome {
    pub text: String,
    pub degraded: bool,
    pub transcripts: Vec<Transcript>,
}

/// Calls the reasoner for a summary; falls back to the templated digest after
/// `retries` failed retries.
#[allow(clippy::too_many_arguments)]
pub fn summarize(
    reasoner: &dyn Reasoner,
    agent: AgentId,
    records: &[HistoryRecord],
    delta: i64,
    lower: Tick,
    upper: Tick,
    goal: &GoalSpec,
    templates: &Templates,
    budget: Budget,
) -> Result<SummarizeOutcome, SummaryError> {
    if records.is_empty() {
        return Err(SummaryError::Contract("summarize called without records".into()));
    }
    if delta == 0 {
        return Err(SummaryError::Contract("summarize called with zero progress change".into()));
    }
    let request = ReasonerRequest::new(
        upper,
        agent,
        Payload::Summarize(SummarizePayload {
            records: records.to_vec(),
            delta,
            lower,
            upper,
            goal: goal.clone(),
        }),
        templates.clone(),
        budget,
    );
    let mut transcripts = Vec::new();
    for attempt in 0..=budget.max_retries {
        let result = reasoner.invoke(&request);
        if reasoner.records_transcripts() {
            transcripts.push(reasoner.transcript(&request, attempt, &result));
        }
        if let Ok(resp) = result {
            if let Some(Parsed::Summary(text)) = resp.parsed {
                return Ok(SummarizeOutcome { text, degraded: resp.degraded, transcripts });
            }
        }
    }
    Ok(SummarizeOutcome {
        text: templated_digest(records, delta, lower, upper, goal),
        degraded: true,
        transcripts,
    })
}

/// State of the progress-triggered summary loop for one episode.
#[derive(Debug, Clone)]
pub struct SummaryTracker {
    t_last: Tick,
    p_last: TaskProgress,
    collaborative: CollaborativeSummary,
}

impl SummaryTracker {
    pub fn new(initial: TaskProgress) -> Self {
        Self { t_last: 0, p_last: initial, collaborative: CollaborativeSummary::new() }
    }

    pub fn t_last(&self) -> Tick {
        self.t_last
    }

    pub fn p_last(&self) -> &TaskProgress {
        &self.p_last
    }

    pub fn collaborative(&self) -> &CollaborativeSummary {
        &self.collaborative
    }

    /// If progress changed, slices `(t_last, t]`, asks `generate` for the summary
    /// text and appends it; then advances `t_last` and `p_last`.
    pub fn step<F>(
        &mut self,
        t: Tick,
        p_now: &TaskProgress,
        history: &History,
        generate: F,
    ) -> Result<Option<&Summary>, SummaryError>
    where
        F: FnOnce(&[HistoryRecord], i64, Tick, Tick) -> Result<(String, bool), SummaryError>,
    {
        if !detect_change(p_now, &self.p_last) {
            return Ok(None);
        }
        let records = slice_history(history, self.t_last, t)?;
        let delta = p_now.satisfied as i64 - self.p_last.satisfied as i64;
        let (text, degraded) = generate(records, delta, self.t_last, t)?;
        self.collaborative.append(Summary {
            index: self.collaborative.len() as u32 + 1,
            lower: self.t_last,
            upper: t,
            delta_progress: delta,
            text,
            source_record_count: records.len(),
            degraded,
        })?;
        self.p_last = p_now.clone();
        self.t_last = t;
        Ok(self.collaborative.summaries().last())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{ActionPrimitive, GoalPredicate, Location, Relation, TaskCategory};

    fn prog(s: u32) -> TaskProgress {
        TaskProgress { satisfied: s, total: 4, per_predicate: vec![s] }
    }

    fn goal() -> GoalSpec {
        GoalSpec {
            task: TaskCategory::SetUpTable,
            predicates: vec![GoalPredicate {
                relation: Relation::On,
                class: "plate".into(),
                target: "kitchentable".into(),
                required: 4,
            }],
        }
    }

    fn wait(tick: Tick, agent: u32) -> HistoryRecord {
        HistoryRecord {
            tick,
            agent: AgentId(agent),
            action: ActionPrimitive::Wait,
            events: vec![Event::Waited { agent: AgentId(agent) }],
            belief_digest: String::new(),
        }
    }

    #[test]
    fn change_detection() {
        assert!(!detect_change(&prog(2), &prog(2)));
        assert!(detect_change(&prog(3), &prog(2)));
        assert!(detect_change(&prog(1), &prog(2)));
    }

    #[test]
    fn slicing_is_half_open_below() {
        let mut h = History::new();
        for t in 1..=9 {
            h.push(wait(t, 1)).unwrap();
        }
        let ticks = |s: &[HistoryRecord]| s.iter().map(|r| r.tick).collect::<Vec<_>>();
        assert_eq!(ticks(slice_history(&h, 3, 7).unwrap()), vec![4, 5, 6, 7]);
        assert_eq!(ticks(slice_history(&h, 5, 6).unwrap()), vec![6]);
        assert!(slice_history(&h, 7, 3).is_err());
        assert!(slice_history(&h, 4, 4).is_err());
    }

    fn summary(index: u32, lower: Tick, upper: Tick) -> Summary {
        Summary {
            index,
            lower,
            upper,
            delta_progress: 1,
            text: String::new(),
            source_record_count: 1,
            degraded: false,
        }
    }

    #[test]
    fn append_enforces_adjacency() {
        let mut c = CollaborativeSummary::new();
        c.append(summary(1, 0, 5)).unwrap();
        assert_eq!(c.len(), 1);
        c.append(summary(2, 5, 9)).unwrap();
        assert_eq!(c.len(), 2);
        let mut gap = c.clone();
        assert!(gap.append(summary(3, 10, 12)).is_err());
        assert!(gap.append(summary(3, 8, 12)).is_err());
        assert!(gap.append(summary(4, 9, 12)).is_err());
        let mut c = CollaborativeSummary::new();
        assert!(c.append(summary(1, 6, 9)).is_err());
    }

    #[test]
    fn digest_names_the_placement() {
        let rec = HistoryRecord {
            tick: 3,
            agent: AgentId(1),
            action: ActionPrimitive::PutOn("kitchentable".into()),
            events: vec![Event::Placed {
                agent: AgentId(1),
                object: "plate_2".into(),
                class: "plate".into(),
                to: Location::On("kitchentable".into()),
            }],
            belief_digest: String::new(),
        };
        let text = templated_digest(&[rec], 1, 2, 3, &goal());
        for needle in ["agent 1", "plate_2", "kitchentable", "+1"] {
            assert!(text.contains(needle), "{needle} missing from {text}");
        }
    }

    #[test]
    fn digest_reports_conflicts_and_respects_budget() {
        let mut records: Vec<HistoryRecord> = (1..=12).map(|t| wait(t, 1 + (t as u32 % 2))).collect();
        records[6].events = vec![Event::Conflict {
            agent: AgentId(2),
            action: ActionPrimitive::Grab("apple_3".into()),
            winner: AgentId(1),
        }];
        let text = templated_digest(&records, -1, 0, 12, &goal());
        assert!(text.contains("lost Grab(apple_3) to agent 1"), "{text}");
        let many: Vec<HistoryRecord> = (1..=400)
            .map(|t| HistoryRecord {
                events: vec![Event::Conflict { agent: AgentId(2), action: ActionPrimitive::Wait, winner: AgentId(1) }],
                ..wait(t, 2)
            })
            .collect();
        assert!(templated_digest(&many, 1, 0, 400, &goal()).chars().count() <= SUMMARY_BUDGET);
    }

    #[test]
    fn tracker_follows_progress_changes() {
        let mut h = History::new();
        for t in 1..=10 {
            h.push(wait(t, 1)).unwrap();
        }
        let mut tr = SummaryTracker::new(prog(0));
        let gen = |r: &[HistoryRecord], d: i64, lo: Tick, hi: Tick| Ok((templated_digest(r, d, lo, hi, &goal()), false));
        assert!(tr.step(3, &prog(0), &h, gen).unwrap().is_none());
        let s = tr.step(4, &prog(1), &h, gen).unwrap().unwrap().clone();
        assert_eq!((s.lower, s.upper, s.delta_progress, s.source_record_count), (0, 4, 1, 4));
        let s = tr.step(9, &prog(0), &h, gen).unwrap().unwrap().clone();
        assert_eq!((s.lower, s.upper, s.delta_progress), (4, 9, -1));
        assert_eq!(tr.t_last(), 9);
        assert_eq!(tr.p_last(), &prog(0));
        assert_eq!(tr.collaborative().len(), 2);
    }
}
