//! Symbolic household environment: state, transition, observation, goals and progress.

mod action;
mod catalog;
mod dynamics;
mod goal;
mod layout;
mod state;

pub use action::{ActionPrimitive, Event};
pub use catalog::{init_world, Catalog, CATALOG_VERSION, MAX_AGENTS};
pub use dynamics::{
    check_legal, legal_actions, observe, transition, AgentSighting, Observation, ObservedObject,
};
pub use goal::{
    evaluate_progress, reward, GoalPredicate, GoalSpec, Placements, Relation, TaskCategory,
    TaskProgress,
};
pub use layout::Layout;
pub use state::{AgentState, Location, ObjectState, WorldState};

use crate::ids::AgentId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorldError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("contract violation: {0}")]
    Contract(String),
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::ids::RoomId;

    fn two_rooms() -> Arc<Layout> {
        Arc::new(
            Layout::new(
                ["kitchen", "livingroom"].map(RoomId::from),
                [("kitchen".into(), "livingroom".into())],
                [("fridge".into(), "kitchen".into()), ("dishwasher".into(), "kitchen".into())],
                [("kitchentable".into(), "kitchen".into())],
            )
            .unwrap(),
        )
    }

    fn waits(s: &WorldState) -> Vec<(AgentId, ActionPrimitive)> {
        s.agent_ids().map(|a| (a, ActionPrimitive::Wait)).collect()
    }

    #[test]
    fn empty_hand_closed_fridge() {
        let layout = Arc::new(
            Layout::new(
                ["kitchen", "livingroom"].map(RoomId::from),
                [("kitchen".into(), "livingroom".into())],
                [("fridge".into(), "kitchen".into())],
                [],
            )
            .unwrap(),
        );
        let s = WorldState::new(layout).with_agent(AgentId(1), "kitchen");
        let got = legal_actions(&s, AgentId(1)).unwrap();
        let want = [
            ActionPrimitive::GoTo("livingroom".into()),
            ActionPrimitive::Open("fridge".into()),
            ActionPrimitive::Explore,
            ActionPrimitive::Wait,
        ]
        .into_iter()
        .collect();
        assert_eq!(got, want);
        assert_eq!(legal_actions(&s, AgentId(9)), Err(WorldError::UnknownAgent(AgentId(9))));
    }

    #[test]
    fn holding_plate_by_open_dishwasher() {
        let s = WorldState::new(two_rooms())
            .with_agent(AgentId(1), "kitchen")
            .with_object("plate_1", "plate", Location::Hand(AgentId(1)))
            .with_container_open("dishwasher", true);
        let got = legal_actions(&s, AgentId(1)).unwrap();
        assert!(got.contains(&ActionPrimitive::PutIn("dishwasher".into())));
        assert!(!got.contains(&ActionPrimitive::PutIn("fridge".into())));
        assert!(got.contains(&ActionPrimitive::PutOn("kitchentable".into())));
    }

    #[test]
    fn all_wait_only_ticks() {
        let s = WorldState::new(two_rooms())
            .with_agent(AgentId(1), "kitchen")
            .with_agent(AgentId(2), "livingroom")
            .with_object("apple_1", "apple", Location::In("fridge".into()));
        let (next, events) = transition(&s, &waits(&s)).unwrap();
        let mut expect = s.clone();
        expect.tick += 1;
        assert_eq!(next, expect);
        assert_eq!(events.len(), 2);
    }

    #[test]
    fn lower_id_wins_grab() {
        let s = WorldState::new(two_rooms())
            .with_agent(AgentId(1), "kitchen")
            .with_agent(AgentId(2), "kitchen")
            .with_object("apple_3", "apple", Location::Floor("kitchen".into()));
        let joint = vec![
            (AgentId(2), ActionPrimitive::Grab("apple_3".into())),
            (AgentId(1), ActionPrimitive::Grab("apple_3".into())),
        ];
        let (next, events) = transition(&s, &joint).unwrap();
        assert_eq!(next.agents[&AgentId(1)].held, Some("apple_3".into()));
        assert_eq!(next.agents[&AgentId(2)].held, None);
        assert!(events.iter().any(|e| matches!(e,
            Event::Conflict { agent: AgentId(2), winner: AgentId(1), .. })));
    }

    #[test]
    fn close_versus_grab_from_container() {
        let s = WorldState::new(two_rooms())
            .with_agent(AgentId(1), "kitchen")
            .with_agent(AgentId(2), "kitchen")
            .with_container_open("fridge", true)
            .with_object("milk_1", "milk", Location::In("fridge".into()));
        // closer has the lower id: the grab loses
        let (next, events) = transition(
            &s,
            &[
                (AgentId(1), ActionPrimitive::Close("fridge".into())),
                (AgentId(2), ActionPrimitive::Grab("milk_1".into())),
            ],
        )
        .unwrap();
        assert!(!next.is_open(&"fridge".into()));
        assert_eq!(next.objects[&"milk_1".into()].location, Location::In("fridge".into()));
        assert!(events.iter().any(|e| e.is_conflict() && e.agent() == AgentId(2)));
        // grabber has the lower id: the close loses
        let (next, events) = transition(
            &s,
            &[
                (AgentId(2), ActionPrimitive::Close("fridge".into())),
                (AgentId(1), ActionPrimitive::Grab("milk_1".into())),
            ],
        )
        .unwrap();
        assert!(next.is_open(&"fridge".into()));
        assert_eq!(next.agents[&AgentId(1)].held, Some("milk_1".into()));
        assert!(events.iter().any(|e| e.is_conflict() && e.agent() == AgentId(2)));
    }

    #[test]
    fn illegal_degrades_to_failure() {
        let s = WorldState::new(two_rooms()).with_agent(AgentId(1), "livingroom");
        let (next, events) =
            transition(&s, &[(AgentId(1), ActionPrimitive::Open("fridge".into()))]).unwrap();
        assert_eq!(next.tick, 1);
        assert_eq!(next.containers, s.containers);
        assert!(matches!(&events[..], [Event::Failure { .. }]));
    }

    #[test]
    fn malformed_joint_is_rejected() {
        let s = WorldState::new(two_rooms())
            .with_agent(AgentId(1), "kitchen")
            .with_agent(AgentId(2), "kitchen");
        let missing = vec![(AgentId(1), ActionPrimitive::Wait)];
        assert!(matches!(transition(&s, &missing), Err(WorldError::Contract(_))));
        let dup = vec![
            (AgentId(1), ActionPrimitive::Wait),
            (AgentId(1), ActionPrimitive::Wait),
            (AgentId(2), ActionPrimitive::Wait),
        ];
        assert!(matches!(transition(&s, &dup), Err(WorldError::Contract(_))));
    }

    #[test]
    fn closed_container_hides_contents() {
        let s = WorldState::new(two_rooms())
            .with_agent(AgentId(1), "kitchen")
            .with_object("apple_1", "apple", Location::In("fridge".into()));
        let o = observe(&s, AgentId(1)).unwrap();
        assert!(o.objects.is_empty());
        let s = s.with_container_open("fridge", true);
        let o = observe(&s, AgentId(1)).unwrap();
        assert_eq!(o.objects.len(), 1);
    }

    #[test]
    fn alone_in_empty_room() {
        let s = WorldState::new(two_rooms())
            .with_agent(AgentId(1), "livingroom")
            .with_object("apple_1", "apple", Location::Floor("kitchen".into()));
        let o = observe(&s, AgentId(1)).unwrap();
        assert_eq!(o.room, RoomId::from("livingroom"));
        assert!(o.objects.is_empty() && o.agents_here.is_empty() && o.containers.is_empty());
        assert!(o.held.is_none());
    }
}
