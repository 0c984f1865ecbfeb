use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ids::{AgentId, FixtureId, ObjectId, RoomId, Tick};

use super::{Layout, WorldError};

/// Where an object currently is.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Location {
    Floor(RoomId),
    On(FixtureId),
    In(FixtureId),
    Hand(AgentId),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Floor(r) => write!(f, "floor:{r}"),
            Location::On(s) => write!(f, "on:{s}"),
            Location::In(c) => write!(f, "in:{c}"),
            Location::Hand(a) => write!(f, "hand:{a}"),
        }
    }
}

impl FromStr for Location {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| format!("bad location {s:?}"))?;
        match kind {
            "floor" => Ok(Location::Floor(rest.into())),
            "on" => Ok(Location::On(rest.into())),
            "in" => Ok(Location::In(rest.into())),
            "hand" => rest
                .parse()
                .map(|n| Location::Hand(AgentId(n)))
                .map_err(|_| format!("bad agent in {s:?}")),
            _ => Err(format!("bad location {s:?}")),
        }
    }
}

impl From<Location> for String {
    fn from(l: Location) -> Self {
        l.to_string()
    }
}

impl TryFrom<String> for Location {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectState {
    pub class: String,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    pub room: RoomId,
    pub held: Option<ObjectId>,
}

/// Full ground-truth environment state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldState {
    pub tick: Tick,
    pub layout: Arc<Layout>,
    /// Open flag per container.
    pub containers: BTreeMap<FixtureId, bool>,
    pub objects: BTreeMap<ObjectId, ObjectState>,
    pub agents: BTreeMap<AgentId, AgentState>,
}

impl WorldState {
    /// Empty world over `layout` with every container closed.
    pub fn new(layout: Arc<Layout>) -> Self {
        let containers = layout.containers().keys().map(|c| (c.clone(), false)).collect();
        Self {
            tick: 0,
            layout,
            containers,
            objects: BTreeMap::new(),
            agents: BTreeMap::new(),
        }
    }

    pub fn with_agent(mut self, id: AgentId, room: impl Into<RoomId>) -> Self {
        self.agents.insert(id, AgentState { room: room.into(), held: None });
        self
    }

    pub fn with_object(
        mut self,
        id: impl Into<ObjectId>,
        class: impl Into<String>,
        location: Location,
    ) -> Self {
        let id = id.into();
        if let Location::Hand(a) = &location {
            if let Some(agent) = self.agents.get_mut(a) {
                agent.held = Some(id.clone());
            }
        }
        self.objects.insert(id, ObjectState { class: class.into(), location });
        self
    }

    pub fn with_container_open(mut self, id: impl Into<FixtureId>, open: bool) -> Self {
        self.containers.insert(id.into(), open);
        self
    }

    pub fn agent(&self, id: AgentId) -> Result<&AgentState, WorldError> {
        self.agents.get(&id).ok_or(WorldError::UnknownAgent(id))
    }

    pub fn is_open(&self, container: &FixtureId) -> bool {
        self.containers.get(container).copied().unwrap_or(false)
    }

    /// Room a location physically sits in.
    pub fn room_of<'a>(&'a self, location: &'a Location) -> Option<&'a RoomId> {
        match location {
            Location::Floor(r) => Some(r),
            Location::On(f) | Location::In(f) => self.layout.fixture_room(f),
            Location::Hand(a) => self.agents.get(a).map(|s| &s.room),
        }
    }

    /// Visible to someone standing in `room`: not held, and not shut inside a closed container.
    pub fn is_visible_from(&self, location: &Location, room: &RoomId) -> bool {
        match location {
            Location::Floor(r) => r == room,
            Location::On(s) => self.layout.fixture_room(s) == Some(room),
            Location::In(c) => self.layout.fixture_room(c) == Some(room) && self.is_open(c),
            Location::Hand(_) => false,
        }
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.agents.keys().copied()
    }

    /// Checks every structural invariant; used by tests and debug assertions.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (id, obj) in &self.objects {
            match &obj.location {
                Location::Floor(r) if !self.layout.has_room(r) => {
                    return Err(format!("{id} on floor of unknown room {r}"))
                }
                Location::On(s) if !self.layout.is_surface(s) => {
                    return Err(format!("{id} on non-surface {s}"))
                }
                Location::In(c) if !self.layout.is_container(c) => {
                    return Err(format!("{id} in non-container {c}"))
                }
                Location::Hand(a) => match self.agents.get(a) {
                    Some(st) if st.held.as_ref() == Some(id) => {}
                    _ => return Err(format!("{id} in hand of {a} who does not hold it")),
                },
                _ => {}
            }
        }
        for (a, st) in &self.agents {
            if !self.layout.has_room(&st.room) {
                return Err(format!("agent {a} in unknown room {}", st.room));
            }
            if let Some(h) = &st.held {
                match self.objects.get(h) {
                    Some(o) if o.location == Location::Hand(*a) => {}
                    _ => return Err(format!("agent {a} holds {h} but it is elsewhere")),
                }
            }
        }
        if self.containers.keys().ne(self.layout.containers().keys()) {
            return Err("container flags do not match layout".into());
        }
        Ok(())
    }
}
