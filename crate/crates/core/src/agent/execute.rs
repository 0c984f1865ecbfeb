//! Macro-task expansion into one primitive per tick.

use crate::ids::{AgentId, FixtureId, ObjectId, RoomId};
use crate::world::{ActionPrimitive, Event, Layout, Location, Observation, Relation};

use super::{Belief, Fact, MacroTask, ObjectRef};

/// The executing agent's own situation, read from its current observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentSelf {
    pub agent: AgentId,
    pub room: RoomId,
    pub held: Option<(ObjectId, String)>,
}

impl AgentSelf {
    pub fn from_observation(o: &Observation) -> Self {
        Self {
            agent: o.agent,
            room: o.room.clone(),
            held: o.held.as_ref().map(|h| (h.id.clone(), h.class.clone())),
        }
    }
}

/// The primitive to run this tick plus a failure event when the task was unusable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    pub action: ActionPrimitive,
    pub failure: Option<Event>,
}

impl From<ActionPrimitive> for Expansion {
    fn from(action: ActionPrimitive) -> Self {
        Expansion { action, failure: None }
    }
}

fn container_closed(belief: &Belief, c: &FixtureId) -> bool {
    belief.container(c).is_none_or(|f| !f.open)
}

fn step_towards(layout: &Layout, from: &RoomId, to: &RoomId) -> ActionPrimitive {
    layout
        .next_hop(from, to)
        .map_or(ActionPrimitive::Wait, |r| ActionPrimitive::GoTo(r.clone()))
}

/// Whether `room` may still hide objects: never visited, or holding a
/// container that has not been seen open.
pub fn room_unexplored(belief: &Belief, layout: &Layout, room: &RoomId) -> bool {
    belief.last_visit(room).is_none() || layout.containers_in(room).any(|c| container_closed(belief, c))
}

/// Rooms in exploration order: unexplored rooms nearest first (the current
/// room included), then explored rooms least recently visited first (the
/// current room excluded). Ties by room id.
pub fn exploration_order(belief: &Belief, layout: &Layout, current: &RoomId) -> Vec<RoomId> {
    let mut keyed: Vec<_> = layout
        .rooms()
        .iter()
        .filter_map(|r| {
            let open = room_unexplored(belief, layout, r);
            if !open && r == current {
                return None;
            }
            let d = if open { layout.distance(current, r).unwrap_or(u32::MAX) } else { 0 };
            Some(((!open, d, belief.last_visit(r)), r.clone()))
        })
        .collect();
    keyed.sort();
    keyed.into_iter().map(|(_, r)| r).collect()
}

/// First room of [`exploration_order`], or `current` when it is the only room.
pub fn exploration_target(belief: &Belief, layout: &Layout, current: &RoomId) -> RoomId {
    exploration_order(belief, layout, current)
        .into_iter()
        .next()
        .unwrap_or_else(|| current.clone())
}

fn explore_in(room: &RoomId, belief: &Belief, me: &AgentSelf, layout: &Layout) -> ActionPrimitive {
    if me.room != *room {
        return step_towards(layout, &me.room, room);
    }
    layout
        .containers_in(room)
        .find(|c| container_closed(belief, c))
        .map_or(ActionPrimitive::Explore, |c| ActionPrimitive::Open(c.clone()))
}

/// Put down whatever is held: nearest surface, or an open container here.
fn stash(belief: &Belief, me: &AgentSelf, layout: &Layout) -> ActionPrimitive {
    if let Some(s) = layout.surfaces_in(&me.room).next() {
        return ActionPrimitive::PutOn(s.clone());
    }
    if let Some(c) = layout.containers_in(&me.room).find(|c| !container_closed(belief, c)) {
        return ActionPrimitive::PutIn(c.clone());
    }
    if let Some(c) = layout.containers_in(&me.room).next() {
        return ActionPrimitive::Open(c.clone());
    }
    let nearest = layout
        .surfaces()
        .values()
        .min_by_key(|r| (layout.distance(&me.room, r), *r));
    match nearest {
        Some(r) => step_towards(layout, &me.room, r),
        None => ActionPrimitive::Wait,
    }
}

/// Nearest live object matching `class` that is not already at the target and
/// not in another agent's hand.
fn nearest_of_class<'a>(
    belief: &'a Belief,
    class: &str,
    avoid: &Location,
    me: &AgentSelf,
    layout: &Layout,
) -> Option<&'a Fact> {
    belief
        .facts()
        .filter(|f| f.class == class && f.location != *avoid && !matches!(f.location, Location::Hand(_)))
        .min_by_key(|f| (layout.distance(&me.room, &f.room), &f.object))
}

/// Expands `task` into exactly one primitive for this tick.
///
/// Priority: deliver a held matching object (opening a closed target first);
/// put down any other held object; walk to and grab the object if its
/// location is believed; otherwise explore the [`exploration_target`].
pub fn expand_macro(task: &MacroTask, belief: &Belief, me: &AgentSelf, layout: &Layout) -> Expansion {
    let fail = |reason: String| Expansion {
        action: ActionPrimitive::Wait,
        failure: Some(Event::Failure { agent: me.agent, action: ActionPrimitive::Wait, reason }),
    };
    match task {
        MacroTask::Idle => ActionPrimitive::Wait.into(),
        MacroTask::ExploreRoom(room) => {
            if !layout.has_room(room) {
                return fail(format!("{task}: unknown room {room}"));
            }
            explore_in(room, belief, me, layout).into()
        }
        MacroTask::FetchAndPlace { object, relation, target } => {
            let valid_target = match relation {
                Relation::On => layout.is_surface(target),
                Relation::In => layout.is_container(target),
            };
            let Some(target_room) = layout.fixture_room(target).filter(|_| valid_target) else {
                return fail(format!("{task}: no {relation} target {target}"));
            };
            let goal_loc = relation.location(target);
            let holding_match = me.held.as_ref().is_some_and(|(id, class)| match object {
                ObjectRef::Id(want) => want == id,
                ObjectRef::Class(want) => want == class,
            });
            if holding_match {
                if me.room != *target_room {
                    return step_towards(layout, &me.room, target_room).into();
                }
                return match relation {
                    Relation::In if container_closed(belief, target) => {
                        ActionPrimitive::Open(target.clone())
                    }
                    Relation::In => ActionPrimitive::PutIn(target.clone()),
                    Relation::On => ActionPrimitive::PutOn(target.clone()),
                }
                .into();
            }
            if me.held.is_some() {
                return stash(belief, me, layout).into();
            }
            let fact = match object {
                ObjectRef::Id(id) => belief.fact(id).filter(|f| !matches!(f.location, Location::Hand(_))),
                ObjectRef::Class(c) => nearest_of_class(belief, c, &goal_loc, me, layout),
            };
            match fact {
                Some(f) if f.room != me.room => step_towards(layout, &me.room, &f.room).into(),
                Some(f) => match &f.location {
                    Location::In(c) if container_closed(belief, c) => ActionPrimitive::Open(c.clone()),
                    _ => ActionPrimitive::Grab(f.object.clone()),
                }
                .into(),
                None => {
                    let room = exploration_target(belief, layout, &me.room);
                    explore_in(&room, belief, me, layout).into()
                }
            }
        }
    }
}
