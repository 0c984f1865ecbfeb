use std::collections::BTreeMap;
use std::sync::Arc;

use crate::agent::{merge_team_belief, Belief, RenderText};
use crate::ids::{AgentId, Tick};
use crate::world::{Layout, Observation};

use super::{CoordinationError, Proposal};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextEntry {
    pub agent: AgentId,
    pub proposal: Proposal,
    pub belief: Belief,
    pub observation: Observation,
    pub belief_digest: String,
    pub observation_digest: String,
}

/// The manager's per-round view: one entry per agent, ascending id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossAgentContext {
    pub tick: Tick,
    entries: Vec<ContextEntry>,
    team: Belief,
    layout: Arc<Layout>,
}

impl CrossAgentContext {
    pub fn entries(&self) -> &[ContextEntry] {
        &self.entries
    }

    pub fn entry(&self, agent: AgentId) -> Option<&ContextEntry> {
        self.entries.iter().find(|e| e.agent == agent)
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.entries.iter().map(|e| e.agent)
    }

    /// Merge of every entry's belief.
    pub fn team_belief(&self) -> &Belief {
        &self.team
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }
}

/// Collects each agent's proposal, belief and observation into one context.
///
/// Inputs may arrive in any order; every agent must supply exactly one of each.
pub fn assemble_context(
    tick: Tick,
    proposals: impl IntoIterator<Item = Proposal>,
    beliefs: impl IntoIterator<Item = (AgentId, Belief)>,
    observations: impl IntoIterator<Item = Observation>,
    layout: Arc<Layout>,
) -> Result<CrossAgentContext, CoordinationError> {
    fn keyed<T>(
        what: &str,
        items: impl IntoIterator<Item = (AgentId, T)>,
    ) -> Result<BTreeMap<AgentId, T>, CoordinationError> {
        let mut map = BTreeMap::new();
        for (a, t) in items {
            if map.insert(a, t).is_some() {
                return Err(CoordinationError::Contract(format!("duplicate {what} for agent {a}")));
            }
        }
        Ok(map)
    }
    let mut proposals = keyed("proposal", proposals.into_iter().map(|p| (p.agent, p)))?;
    let mut beliefs = keyed("belief", beliefs)?;
    let mut observations = keyed("observation", observations.into_iter().map(|o| (o.agent, o)))?;
    if proposals.is_empty() {
        return Err(CoordinationError::Contract("empty context".into()));
    }
    let agents: Vec<AgentId> = proposals.keys().copied().collect();
    let mut entries = Vec::with_capacity(agents.len());
    for a in agents {
        let proposal = proposals.remove(&a).unwrap();
        let belief = beliefs
            .remove(&a)
            .ok_or_else(|| CoordinationError::Contract(format!("no belief for agent {a}")))?;
        let observation = observations
            .remove(&a)
            .ok_or_else(|| CoordinationError::Contract(format!("no observation for agent {a}")))?;
        entries.push(ContextEntry {
            agent: a,
            belief_digest: belief.render_text(),
            observation_digest: observation.render_text(),
            proposal,
            belief,
            observation,
        });
    }
    if let Some(a) = beliefs.keys().chain(observations.keys()).next() {
        return Err(CoordinationError::Contract(format!("no proposal for agent {a}")));
    }
    let team = merge_team_belief(entries.iter().map(|e| &e.belief));
    Ok(CrossAgentContext { tick, entries, team, layout })
}
