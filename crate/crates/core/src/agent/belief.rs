//! Structured beliefs built from observations and merged last-write-wins.
//!
//! A belief keeps, per object, the single most recent sighting together with
//! the room it was in. Room visits, container flags and sightings of other
//! agents are kept alongside. Facts are never physically deleted: a fact is
//! *stale* when a later look at the place it names did not refresh it, and
//! stale facts are hidden from every read accessor. Keeping the raw maps as
//! pure per-key maxima makes [`merge_team_belief`] a join: idempotent,
//! commutative and associative.

use std::collections::BTreeMap;

use crate::ids::{AgentId, FixtureId, ObjectId, RoomId, Tick};
use crate::world::{Location, Observation, Placements};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub object: ObjectId,
    pub class: String,
    pub location: Location,
    /// Room the location was in when observed.
    pub room: RoomId,
    pub observed_at: Tick,
    pub source: AgentId,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContainerFact {
    pub open: bool,
    pub observed_at: Tick,
    pub source: AgentId,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentFact {
    pub room: RoomId,
    pub held: Option<ObjectId>,
    pub observed_at: Tick,
    pub source: AgentId,
}

/// Precedence key: newest wins, lower source id wins ties, content breaks the rest.
trait Stamped {
    fn stamp(&self) -> (Tick, std::cmp::Reverse<AgentId>);
}

impl Stamped for Fact {
    fn stamp(&self) -> (Tick, std::cmp::Reverse<AgentId>) {
        (self.observed_at, std::cmp::Reverse(self.source))
    }
}
impl Stamped for ContainerFact {
    fn stamp(&self) -> (Tick, std::cmp::Reverse<AgentId>) {
        (self.observed_at, std::cmp::Reverse(self.source))
    }
}
impl Stamped for AgentFact {
    fn stamp(&self) -> (Tick, std::cmp::Reverse<AgentId>) {
        (self.observed_at, std::cmp::Reverse(self.source))
    }
}

fn upsert<K: Ord, V: Stamped + Ord + Clone>(map: &mut BTreeMap<K, V>, key: K, value: V) {
    match map.get(&key) {
        Some(old) if (old.stamp(), old) >= (value.stamp(), &value) => {}
        _ => {
            map.insert(key, value);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Belief {
    facts: BTreeMap<ObjectId, Fact>,
    visited: BTreeMap<RoomId, Tick>,
    containers: BTreeMap<FixtureId, ContainerFact>,
    agents: BTreeMap<AgentId, AgentFact>,
}

/// One agent's memory of the world.
pub type AgentBelief = Belief;
/// The merge of every agent's belief.
pub type TeamBelief = Belief;

impl Belief {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
            && self.visited.is_empty()
            && self.containers.is_empty()
            && self.agents.is_empty()
    }

    /// Inserts a fact under last-write-wins. Mostly for tests and fixtures.
    pub fn record_fact(&mut self, fact: Fact) {
        upsert(&mut self.facts, fact.object.clone(), fact);
    }

    pub fn record_visit(&mut self, room: RoomId, tick: Tick) {
        let t = self.visited.entry(room).or_insert(tick);
        *t = (*t).max(tick);
    }

    pub fn record_container(&mut self, id: FixtureId, fact: ContainerFact) {
        upsert(&mut self.containers, id, fact);
    }

    pub fn record_agent(&mut self, id: AgentId, fact: AgentFact) {
        upsert(&mut self.agents, id, fact);
    }

    fn is_stale(&self, f: &Fact) -> bool {
        match &f.location {
            Location::Floor(_) | Location::On(_) => {
                self.visited.get(&f.room).is_some_and(|&t| t > f.observed_at)
            }
            Location::In(c) => self
                .containers
                .get(c)
                .is_some_and(|cf| cf.open && cf.observed_at > f.observed_at),
            Location::Hand(a) => self.agents.get(a).is_some_and(|af| af.observed_at > f.observed_at),
        }
    }

    /// Live (non-stale) fact for `object`.
    pub fn fact(&self, object: &ObjectId) -> Option<&Fact> {
        self.facts.get(object).filter(|f| !self.is_stale(f))
    }

    /// Live facts in object-id order.
    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.facts.values().filter(|f| !self.is_stale(f))
    }

    /// Stored fact for `object`, stale or not.
    pub fn raw_fact(&self, object: &ObjectId) -> Option<&Fact> {
        self.facts.get(object)
    }

    /// Every stored fact including stale ones, in object-id order.
    pub fn raw_facts(&self) -> impl Iterator<Item = (&Fact, bool)> {
        self.facts.values().map(|f| (f, self.is_stale(f)))
    }

    pub fn visited(&self) -> &BTreeMap<RoomId, Tick> {
        &self.visited
    }

    pub fn last_visit(&self, room: &RoomId) -> Option<Tick> {
        self.visited.get(room).copied()
    }

    pub fn container(&self, id: &FixtureId) -> Option<&ContainerFact> {
        self.containers.get(id)
    }

    pub fn containers(&self) -> &BTreeMap<FixtureId, ContainerFact> {
        &self.containers
    }

    pub fn agent_sighting(&self, id: AgentId) -> Option<&AgentFact> {
        self.agents.get(&id)
    }

    pub fn agent_sightings(&self) -> &BTreeMap<AgentId, AgentFact> {
        &self.agents
    }

    /// Latest tick mentioned anywhere in the belief.
    pub fn latest_tick(&self) -> Option<Tick> {
        let f = self.facts.values().map(|f| f.observed_at);
        let v = self.visited.values().copied();
        let c = self.containers.values().map(|c| c.observed_at);
        let a = self.agents.values().map(|a| a.observed_at);
        f.chain(v).chain(c).chain(a).max()
    }

    /// Pointwise last-write-wins join with `other`.
    pub fn merge(&self, other: &Belief) -> Belief {
        let mut out = self.clone();
        for (k, v) in &other.facts {
            upsert(&mut out.facts, k.clone(), v.clone());
        }
        for (k, &t) in &other.visited {
            out.record_visit(k.clone(), t);
        }
        for (k, v) in &other.containers {
            upsert(&mut out.containers, k.clone(), v.clone());
        }
        for (k, v) in &other.agents {
            upsert(&mut out.agents, *k, v.clone());
        }
        out
    }

    /// Short one-line summary for history records.
    pub fn digest(&self) -> String {
        let live = self.facts().count();
        let rooms: Vec<&str> = self.visited.keys().map(RoomId::as_str).collect();
        format!("facts={live} visited=[{}]", rooms.join(","))
    }
}

impl Placements for Belief {
    fn for_each_placement(&self, f: &mut dyn FnMut(&str, &Location)) {
        for fact in self.facts() {
            f(&fact.class, &fact.location);
        }
    }
}

/// Folds one observation into an agent's belief.
///
/// Every observed object, container and co-located agent is upserted with
/// `tick`; the room visit is recorded, which retires any older fact placing a
/// visible object in this room.
pub fn perceive(observation: &Observation, belief: &AgentBelief, tick: Tick) -> AgentBelief {
    let me = observation.agent;
    let room = &observation.room;
    let mut out = belief.clone();
    out.record_visit(room.clone(), tick);
    for (c, open) in &observation.containers {
        out.record_container(c.clone(), ContainerFact { open: *open, observed_at: tick, source: me });
    }
    for s in &observation.agents_here {
        out.record_agent(
            s.agent,
            AgentFact { room: room.clone(), held: s.held.clone(), observed_at: tick, source: me },
        );
    }
    for o in observation.objects.iter().chain(observation.held.iter()) {
        out.record_fact(Fact {
            object: o.id.clone(),
            class: o.class.clone(),
            location: o.location.clone(),
            room: room.clone(),
            observed_at: tick,
            source: me,
        });
    }
    out
}

/// Merges agent beliefs into the team belief.
pub fn merge_team_belief<'a>(beliefs: impl IntoIterator<Item = &'a Belief>) -> TeamBelief {
    beliefs.into_iter().fold(Belief::new(), |acc, b| acc.merge(b))
}
