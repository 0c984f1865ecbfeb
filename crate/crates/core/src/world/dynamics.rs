//! Legality, the deterministic transition function and local observation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ids::{AgentId, FixtureId, ObjectId, RoomId, Tick};

use super::{ActionPrimitive, Event, Location, WorldError, WorldState};

/// Why `action` cannot run for `agent` in `state`, or `Ok` if it can.
pub fn check_legal(
    state: &WorldState,
    agent: AgentId,
    action: &ActionPrimitive,
) -> Result<(), String> {
    let me = state.agents.get(&agent).ok_or("unknown agent")?;
    let layout = &state.layout;
    let here = &me.room;
    match action {
        ActionPrimitive::GoTo(r) => {
            if !layout.is_adjacent(here, r) {
                return Err(format!("{r} is not adjacent to {here}"));
            }
        }
        ActionPrimitive::Grab(o) => {
            if me.held.is_some() {
                return Err("hand is full".into());
            }
            let obj = state.objects.get(o).ok_or_else(|| format!("no object {o}"))?;
            if !state.is_visible_from(&obj.location, here) {
                return Err(format!("{o} is not reachable from {here}"));
            }
        }
        ActionPrimitive::Open(c) | ActionPrimitive::Close(c) => {
            if layout.containers().get(c) != Some(here) {
                return Err(format!("no container {c} in {here}"));
            }
            let want_open = matches!(action, ActionPrimitive::Open(_));
            if state.is_open(c) == want_open {
                return Err(format!("{c} is already {}", if want_open { "open" } else { "closed" }));
            }
        }
        ActionPrimitive::PutOn(s) => {
            if me.held.is_none() {
                return Err("nothing held".into());
            }
            if layout.surfaces().get(s) != Some(here) {
                return Err(format!("no surface {s} in {here}"));
            }
        }
        ActionPrimitive::PutIn(c) => {
            if me.held.is_none() {
                return Err("nothing held".into());
            }
            if layout.containers().get(c) != Some(here) {
                return Err(format!("no container {c} in {here}"));
            }
            if !state.is_open(c) {
                return Err(format!("{c} is closed"));
            }
        }
        ActionPrimitive::Explore | ActionPrimitive::Wait => {}
    }
    Ok(())
}

/// Every primitive `agent` can execute right now.
pub fn legal_actions(
    state: &WorldState,
    agent: AgentId,
) -> Result<BTreeSet<ActionPrimitive>, WorldError> {
    let me = state.agent(agent)?;
    let layout = &state.layout;
    let here = &me.room;
    let mut out = BTreeSet::from([ActionPrimitive::Explore, ActionPrimitive::Wait]);
    out.extend(layout.neighbors(here).cloned().map(ActionPrimitive::GoTo));
    if me.held.is_none() {
        out.extend(
            state
                .objects
                .iter()
                .filter(|(_, o)| state.is_visible_from(&o.location, here))
                .map(|(id, _)| ActionPrimitive::Grab(id.clone())),
        );
    } else {
        out.extend(layout.surfaces_in(here).cloned().map(ActionPrimitive::PutOn));
        out.extend(
            layout
                .containers_in(here)
                .filter(|c| state.is_open(c))
                .cloned()
                .map(ActionPrimitive::PutIn),
        );
    }
    for c in layout.containers_in(here) {
        out.insert(if state.is_open(c) {
            ActionPrimitive::Close(c.clone())
        } else {
            ActionPrimitive::Open(c.clone())
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Shared,
    Exclusive,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Resource {
    Object(ObjectId),
    Container(FixtureId),
}

fn claims(state: &WorldState, action: &ActionPrimitive) -> Vec<(Resource, Mode)> {
    match action {
        ActionPrimitive::Grab(o) => {
            let mut v = vec![(Resource::Object(o.clone()), Mode::Exclusive)];
            if let Some(Location::In(c)) = state.objects.get(o).map(|x| &x.location) {
                v.push((Resource::Container(c.clone()), Mode::Shared));
            }
            v
        }
        ActionPrimitive::Open(c) | ActionPrimitive::Close(c) => {
            vec![(Resource::Container(c.clone()), Mode::Exclusive)]
        }
        ActionPrimitive::PutIn(c) => vec![(Resource::Container(c.clone()), Mode::Shared)],
        _ => Vec::new(),
    }
}

/// Applies one primitive per agent simultaneously against the pre-state.
///
/// Illegal primitives degrade to `Wait` with a `Failure` event. Competing
/// claims on the same object or container are granted in ascending agent id
/// order; losers degrade to `Wait` with a `Conflict` event.
pub fn transition(
    state: &WorldState,
    joint: &[(AgentId, ActionPrimitive)],
) -> Result<(WorldState, Vec<Event>), WorldError> {
    let mut by_agent: BTreeMap<AgentId, &ActionPrimitive> = BTreeMap::new();
    for (a, act) in joint {
        if !state.agents.contains_key(a) {
            return Err(WorldError::Contract(format!("joint action names unknown agent {a}")));
        }
        if by_agent.insert(*a, act).is_some() {
            return Err(WorldError::Contract(format!("agent {a} assigned twice")));
        }
    }
    if let Some(a) = state.agents.keys().find(|a| !by_agent.contains_key(a)) {
        return Err(WorldError::Contract(format!("agent {a} has no action")));
    }

    let mut events = Vec::new();
    let mut granted: BTreeMap<Resource, (AgentId, Mode)> = BTreeMap::new();
    let mut accepted: Vec<(AgentId, &ActionPrimitive)> = Vec::new();
    for (&agent, &action) in &by_agent {
        if let Err(reason) = check_legal(state, agent, action) {
            events.push(Event::Failure { agent, action: action.clone(), reason });
            continue;
        }
        let wanted = claims(state, action);
        let blocker = wanted.iter().find_map(|(res, mode)| {
            granted.get(res).and_then(|(owner, held)| {
                (*mode == Mode::Exclusive || *held == Mode::Exclusive).then_some(*owner)
            })
        });
        if let Some(winner) = blocker {
            events.push(Event::Conflict { agent, action: action.clone(), winner });
            continue;
        }
        for (res, mode) in wanted {
            let entry = granted.entry(res).or_insert((agent, mode));
            if mode == Mode::Exclusive {
                entry.1 = Mode::Exclusive;
            }
        }
        accepted.push((agent, action));
    }

    let mut next = state.clone();
    next.tick += 1;
    for (agent, action) in accepted {
        let room = state.agents[&agent].room.clone();
        match action {
            ActionPrimitive::GoTo(to) => {
                next.agents.get_mut(&agent).unwrap().room = to.clone();
                events.push(Event::Moved { agent, from: room, to: to.clone() });
            }
            ActionPrimitive::Grab(o) => {
                let obj = next.objects.get_mut(o).unwrap();
                let from = std::mem::replace(&mut obj.location, Location::Hand(agent));
                let class = obj.class.clone();
                next.agents.get_mut(&agent).unwrap().held = Some(o.clone());
                events.push(Event::Grabbed { agent, object: o.clone(), class, from });
            }
            ActionPrimitive::Open(c) => {
                next.containers.insert(c.clone(), true);
                events.push(Event::Opened { agent, container: c.clone() });
            }
            ActionPrimitive::Close(c) => {
                next.containers.insert(c.clone(), false);
                events.push(Event::Closed { agent, container: c.clone() });
            }
            ActionPrimitive::PutOn(f) | ActionPrimitive::PutIn(f) => {
                let to = match action {
                    ActionPrimitive::PutOn(_) => Location::On(f.clone()),
                    _ => Location::In(f.clone()),
                };
                let held = next.agents.get_mut(&agent).unwrap().held.take().unwrap();
                let obj = next.objects.get_mut(&held).unwrap();
                obj.location = to.clone();
                let class = obj.class.clone();
                events.push(Event::Placed { agent, object: held, class, to });
            }
            ActionPrimitive::Explore => events.push(Event::Explored { agent, room }),
            ActionPrimitive::Wait => events.push(Event::Waited { agent }),
        }
    }
    events.sort_by_key(Event::agent);
    debug_assert!(next.check_invariants().is_ok());
    Ok((next, events))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedObject {
    pub id: ObjectId,
    pub class: String,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSighting {
    pub agent: AgentId,
    pub held: Option<ObjectId>,
}

/// What one agent perceives at one tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub agent: AgentId,
    pub tick: Tick,
    pub room: RoomId,
    /// Other agents in the same room.
    pub agents_here: Vec<AgentSighting>,
    /// Visible objects, including those held by co-located agents; excludes the observer's own.
    pub objects: Vec<ObservedObject>,
    pub containers: Vec<(FixtureId, bool)>,
    pub held: Option<ObservedObject>,
}

impl Observation {
    /// One-line compact form for traces.
    pub fn digest(&self) -> String {
        let objs: Vec<String> = self.objects.iter().map(|o| format!("{}@{}", o.id, o.location)).collect();
        let cons: Vec<String> = self
            .containers
            .iter()
            .map(|(c, open)| format!("{c}={}", if *open { "open" } else { "closed" }))
            .collect();
        let others: Vec<String> = self.agents_here.iter().map(|s| s.agent.to_string()).collect();
        format!(
            "{} held={} agents=[{}] containers=[{}] objects=[{}]",
            self.room,
            self.held.as_ref().map_or("-".to_string(), |o| o.id.to_string()),
            others.join(","),
            cons.join(","),
            objs.join(","),
        )
    }
}

/// Local observation: the agent's room only, never the inside of closed containers.
pub fn observe(state: &WorldState, agent: AgentId) -> Result<Observation, WorldError> {
    let me = state.agent(agent)?;
    let room = &me.room;
    let agents_here: Vec<AgentSighting> = state
        .agents
        .iter()
        .filter(|(id, st)| **id != agent && st.room == *room)
        .map(|(id, st)| AgentSighting { agent: *id, held: st.held.clone() })
        .collect();
    let objects = state
        .objects
        .iter()
        .filter(|(_, o)| match &o.location {
            Location::Hand(a) => *a != agent && agents_here.iter().any(|s| s.agent == *a),
            loc => state.is_visible_from(loc, room),
        })
        .map(|(id, o)| ObservedObject { id: id.clone(), class: o.class.clone(), location: o.location.clone() })
        .collect();
    let containers = state
        .layout
        .containers_in(room)
        .map(|c| (c.clone(), state.is_open(c)))
        .collect();
    let held = me.held.as_ref().map(|h| ObservedObject {
        id: h.clone(),
        class: state.objects[h].class.clone(),
        location: Location::Hand(agent),
    });
    Ok(Observation {
        agent,
        tick: state.tick,
        room: room.clone(),
        agents_here,
        objects,
        containers,
        held,
    })
}
