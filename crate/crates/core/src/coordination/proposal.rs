use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agent::{exploration_order, exploration_target, AgentSelf, Belief, HistoryRecord, MacroTask};
use crate::ids::{AgentId, ObjectId};
use crate::reasoner::{Budget, Parsed, Payload, Reasoner, ReasonerRequest, Templates, Transcript};
use crate::world::{GoalSpec, Layout, Location, Observation, TaskProgress};

/// A member's suggested next macro task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub agent: AgentId,
    pub candidate: MacroTask,
    pub rationale: String,
    pub alternatives: Vec<MacroTask>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degraded: bool,
}

impl Proposal {
    pub fn new(agent: AgentId, candidate: MacroTask, rationale: impl Into<String>) -> Self {
        Self { agent, candidate, rationale: rationale.into(), alternatives: Vec::new(), degraded: false }
    }

    /// Candidate followed by alternatives, without duplicates.
    pub fn options(&self) -> Vec<MacroTask> {
        let mut out = vec![self.candidate.clone()];
        for a in &self.alternatives {
            if !out.contains(a) {
                out.push(a.clone());
            }
        }
        out
    }
}

/// Everything a member conditions its proposal on.
#[derive(Debug, Clone)]
pub struct AgentView {
    pub agent: AgentId,
    pub observation: Observation,
    pub belief: Belief,
    pub history: Vec<HistoryRecord>,
    pub progress: TaskProgress,
    pub goal: GoalSpec,
    pub layout: Arc<Layout>,
    /// Maximum number of alternatives.
    pub k: usize,
}

/// Unfinished-goal fetch options sorted nearest first, ties by object id.
/// Held matching objects count as distance 0.
pub fn fetch_options(view: &AgentView) -> Vec<(u32, ObjectId, MacroTask)> {
    let me = AgentSelf::from_observation(&view.observation);
    let mut out: Vec<(u32, ObjectId, MacroTask)> = Vec::new();
    for (i, p) in view.goal.predicates.iter().enumerate() {
        if view.progress.remaining(&view.goal, i) == 0 {
            continue;
        }
        let target = p.relation.location(&p.target);
        if let Some((id, class)) = &me.held {
            if *class == p.class {
                out.push((0, id.clone(), MacroTask::fetch(id.clone(), p.relation, p.target.clone())));
            }
        }
        for f in view.belief.facts() {
            if f.class != p.class || f.location == target || matches!(f.location, Location::Hand(_)) {
                continue;
            }
            let Some(d) = view.layout.distance(&me.room, &f.room) else { continue };
            out.push((d, f.object.clone(), MacroTask::fetch(f.object.clone(), p.relation, p.target.clone())));
        }
    }
    out.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    out.dedup_by(|a, b| a.1 == b.1);
    out
}

/// Rule-based proposal: nearest unfinished-goal object, else the next room in
/// exploration order.
pub fn heuristic_proposal(view: &AgentView) -> Proposal {
    if view.progress.is_complete() {
        return Proposal::new(view.agent, MacroTask::Idle, "goal satisfied");
    }
    let options = fetch_options(view);
    if let Some((d, id, task)) = options.first() {
        let mut p = Proposal::new(
            view.agent,
            task.clone(),
            format!("{id} is the nearest unfinished goal object ({d} rooms away)"),
        );
        p.alternatives = options.iter().skip(1).take(view.k).map(|o| o.2.clone()).collect();
        return p;
    }
    let rooms = exploration_order(&view.belief, &view.layout, &view.observation.room);
    let Some(first) = rooms.first().cloned() else {
        return Proposal::new(view.agent, MacroTask::Idle, "nothing left to explore");
    };
    let mut p = Proposal::new(
        view.agent,
        MacroTask::ExploreRoom(first.clone()),
        format!("no goal object located; exploring {first}"),
    );
    p.alternatives = rooms.into_iter().skip(1).take(view.k).map(MacroTask::ExploreRoom).collect();
    p
}

/// Fallback used when a reasoner cannot produce a usable proposal.
pub fn fallback_proposal(view: &AgentView) -> Proposal {
    let room = exploration_target(&view.belief, &view.layout, &view.observation.room);
    Proposal {
        degraded: true,
        ..Proposal::new(view.agent, MacroTask::ExploreRoom(room), "reasoner failed; exploring")
    }
}

#[derive(Debug, Clone)]
pub struct ProposalOutcome {
    pub proposal: Proposal,
    pub transcripts: Vec<Transcript>,
}

/// Asks `reasoner` for a proposal, retrying up to `budget.max_retries` times
/// before falling back to a degraded exploration proposal.
pub fn make_proposal(
    reasoner: &dyn Reasoner,
    view: AgentView,
    tick: crate::ids::Tick,
    templates: &Templates,
    budget: Budget,
) -> ProposalOutcome {
    let agent = view.agent;
    let request = ReasonerRequest::new(tick, agent, Payload::Propose(view), templates.clone(), budget);
    let mut transcripts = Vec::new();
    for attempt in 0..=budget.max_retries {
        let result = reasoner.invoke(&request);
        if reasoner.records_transcripts() {
            transcripts.push(reasoner.transcript(&request, attempt, &result));
        }
        if let Ok(resp) = result {
            if let Some(Parsed::Proposal(mut p)) = resp.parsed {
                p.degraded |= resp.degraded;
                return ProposalOutcome { proposal: p, transcripts };
            }
        }
    }
    let Payload::Propose(view) = &request.payload else { unreachable!() };
    ProposalOutcome { proposal: fallback_proposal(view), transcripts }
}
