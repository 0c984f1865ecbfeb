use std::collections::BTreeSet;

use housemind::agent::{
    expand_macro, merge_team_belief, perceive, AgentSelf, Belief, MacroTask, ObjectRef, RenderText,
};
use housemind::coordination::{JointAction, Proposal};
use housemind::ids::{AgentId, ObjectId};
use housemind::reasoner::{
    parse_allocation, parse_proposal, parse_summary, render_allocation_response, render_proposal_response,
    render_summary_response,
};
use housemind::world::{
    check_legal, evaluate_progress, init_world, legal_actions, observe, transition, ActionPrimitive, Location,
    Relation, TaskCategory, WorldState,
};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn task() -> impl Strategy<Value = TaskCategory> {
    prop::sample::select(TaskCategory::ALL.to_vec())
}

/// Every primitive that names something in the world, legal or not.
fn all_primitives(s: &WorldState) -> Vec<ActionPrimitive> {
    let mut out = vec![ActionPrimitive::Wait, ActionPrimitive::Explore];
    out.extend(s.layout.rooms().iter().cloned().map(ActionPrimitive::GoTo));
    out.extend(s.objects.keys().cloned().map(ActionPrimitive::Grab));
    for c in s.layout.containers().keys() {
        out.extend([ActionPrimitive::Open(c.clone()), ActionPrimitive::Close(c.clone()), ActionPrimitive::PutIn(c.clone())]);
    }
    for f in s.layout.surfaces().keys() {
        out.extend([ActionPrimitive::PutOn(f.clone()), ActionPrimitive::PutIn(f.clone())]);
    }
    out
}

/// Random legal walk; returns the visited states and each agent's final belief.
fn walk(task: TaskCategory, n: u32, seed: u64, choices: &[u16]) -> (Vec<WorldState>, Vec<Belief>) {
    let (mut s, _) = init_world(task, n, seed).unwrap();
    let agents: Vec<AgentId> = s.agent_ids().collect();
    let mut beliefs = vec![Belief::new(); agents.len()];
    let mut states = vec![s.clone()];
    for step in choices.chunks_exact(agents.len()) {
        let mut joint = Vec::new();
        for ((a, c), b) in agents.iter().zip(step).zip(beliefs.iter_mut()) {
            *b = perceive(&observe(&s, *a).unwrap(), b, s.tick);
            let legal: Vec<_> = legal_actions(&s, *a).unwrap().into_iter().collect();
            joint.push((*a, legal[*c as usize % legal.len()].clone()));
        }
        s = transition(&s, &joint).unwrap().0;
        states.push(s.clone());
    }
    // beliefs end current, as they are when an episode expands tasks
    for (a, b) in agents.iter().zip(beliefs.iter_mut()) {
        *b = perceive(&observe(&s, *a).unwrap(), b, s.tick);
    }
    (states, beliefs)
}

fn object_ids(s: &WorldState) -> Vec<ObjectId> {
    s.objects.keys().cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objects_are_conserved(task in task(), n in 1u32..=3, seed in 0u64..1000, choices in prop::collection::vec(any::<u16>(), 0..90)) {
        let (states, _) = walk(task, n, seed, &choices);
        let ids = object_ids(&states[0]);
        for s in &states {
            prop_assert_eq!(object_ids(s), ids.clone());
            prop_assert!(s.check_invariants().is_ok());
        }
    }

    #[test]
    fn legal_actions_are_exactly_the_checked_ones(task in task(), n in 1u32..=3, seed in 0u64..1000, choices in prop::collection::vec(any::<u16>(), 0..60)) {
        let (states, _) = walk(task, n, seed, &choices);
        let s = states.last().unwrap();
        for a in s.agent_ids() {
            let legal = legal_actions(s, a).unwrap();
            for p in all_primitives(s) {
                prop_assert_eq!(legal.contains(&p), check_legal(s, a, &p).is_ok(), "{} {}", a, p);
            }
        }
    }

    #[test]
    fn observations_are_true(task in task(), n in 1u32..=3, seed in 0u64..1000, choices in prop::collection::vec(any::<u16>(), 0..60)) {
        let (states, _) = walk(task, n, seed, &choices);
        let s = states.last().unwrap();
        for a in s.agent_ids() {
            let o = observe(s, a).unwrap();
            prop_assert_eq!(&o.room, &s.agents[&a].room);
            for seen in o.objects.iter().chain(o.held.iter()) {
                let truth = &s.objects[&seen.id];
                prop_assert_eq!(&seen.location, &truth.location);
                prop_assert_eq!(&seen.class, &truth.class);
            }
            for (c, open) in &o.containers {
                prop_assert_eq!(*open, s.is_open(c));
            }
        }
    }

    #[test]
    fn progress_never_exceeds_total(task in task(), n in 1u32..=3, seed in 0u64..1000, choices in prop::collection::vec(any::<u16>(), 0..90)) {
        let (_, goal) = init_world(task, n, seed).unwrap();
        let (states, _) = walk(task, n, seed, &choices);
        for s in &states {
            let p = evaluate_progress(s, &goal);
            prop_assert!(p.satisfied <= p.total);
            prop_assert_eq!(p.total, goal.total());
        }
    }

    #[test]
    fn expansion_is_legal_or_wait(task in task(), n in 1u32..=3, seed in 0u64..1000, choices in prop::collection::vec(any::<u16>(), 0..60), pick in any::<u16>()) {
        let (states, beliefs) = walk(task, n, seed, &choices);
        let s = states.last().unwrap();
        let (_, goal) = init_world(task, n, seed).unwrap();
        let team = merge_team_belief(&beliefs);
        let mut tasks = vec![MacroTask::Idle];
        tasks.extend(s.layout.rooms().iter().cloned().map(MacroTask::ExploreRoom));
        for p in &goal.predicates {
            tasks.push(MacroTask::FetchAndPlace { object: ObjectRef::Class(p.class.clone()), relation: p.relation, target: p.target.clone() });
            for id in s.objects.keys() {
                tasks.push(MacroTask::fetch(id.clone(), p.relation, p.target.clone()));
            }
        }
        let t = &tasks[pick as usize % tasks.len()];
        for a in s.agent_ids() {
            let me = AgentSelf::from_observation(&observe(s, a).unwrap());
            for b in [&team, &beliefs[a.0 as usize - 1]] {
                let e = expand_macro(t, b, &me, &s.layout);
                prop_assert!(e.action == ActionPrimitive::Wait || check_legal(s, a, &e.action).is_ok(), "{} -> {}", t, e.action);
            }
        }
    }

    #[test]
    fn merge_is_a_semilattice(task in task(), seed in 0u64..1000, choices in prop::collection::vec(any::<u16>(), 0..90)) {
        let (_, beliefs) = walk(task, 3, seed, &choices);
        let [a, b, c] = [&beliefs[0], &beliefs[1], &beliefs[2]];
        prop_assert_eq!(a.merge(a), a.clone());
        prop_assert_eq!(a.merge(b), b.merge(a));
        prop_assert_eq!(a.merge(b).merge(c), a.merge(&b.merge(c)));
        prop_assert_eq!(merge_team_belief([a, b, c]), merge_team_belief([c, a, b]));
    }

    #[test]
    fn allocation_grammar_round_trips(tasks in prop::collection::vec(macro_task(), 1..=3)) {
        let joint: JointAction = tasks.into_iter().enumerate().map(|(i, t)| (AgentId(i as u32 + 1), t)).collect();
        let agents: Vec<AgentId> = joint.iter().map(|(a, _)| *a).collect();
        let text = format!("Sure.\n{}\nDone.", render_allocation_response(&joint));
        prop_assert_eq!(parse_allocation(&text, &agents).unwrap(), joint);
    }

    #[test]
    fn proposal_grammar_round_trips(candidate in macro_task(), alts in prop::collection::vec(macro_task(), 0..=3), rationale in "[a-z]{1,8}( [a-z]{1,8}){0,4}") {
        let p = Proposal { agent: AgentId(2), candidate, alternatives: alts, rationale, degraded: false };
        prop_assert_eq!(parse_proposal(&render_proposal_response(&p), AgentId(2), 3).unwrap(), p);
    }

    #[test]
    fn summary_grammar_round_trips(text in "[A-Za-z0-9][A-Za-z0-9 ,.]{0,200}[A-Za-z0-9.]") {
        let one_line = text.split_whitespace().collect::<Vec<_>>().join(" ");
        prop_assert_eq!(parse_summary(&render_summary_response(&text)).unwrap(), one_line);
    }
}

fn macro_task() -> impl Strategy<Value = MacroTask> {
    let room = prop::sample::select(vec!["kitchen", "livingroom", "bedroom", "bathroom"]);
    let class = prop::sample::select(vec!["plate", "cup", "apple", "teabag"]);
    let fixture = prop::sample::select(vec!["kitchentable", "fridge", "dishwasher", "sink"]);
    let relation = prop::sample::select(vec![Relation::On, Relation::In]);
    prop_oneof![
        Just(MacroTask::Idle),
        room.prop_map(|r| MacroTask::ExploreRoom(r.into())),
        (class, prop::option::of(0u32..20), relation, fixture).prop_map(|(c, n, rel, f)| {
            let object = match n {
                Some(n) => ObjectRef::Id(format!("{c}_{n}").as_str().into()),
                None => ObjectRef::Class(c.to_string()),
            };
            MacroTask::FetchAndPlace { object, relation: rel, target: f.into() }
        }),
    ]
}

#[test]
fn belief_rendering_is_injective_on_a_corpus() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = (task(), 1u32..=3, 0u64..1000, prop::collection::vec(any::<u16>(), 0..60));
    let mut beliefs = BTreeSet::new();
    let mut renders = BTreeSet::new();
    for _ in 0..1000 {
        let (t, n, seed, choices) = strategy.new_tree(&mut runner).unwrap().current();
        let (_, bs) = walk(t, n, seed, &choices);
        for b in bs {
            let r = b.render_text();
            if beliefs.insert(format!("{b:?}")) {
                assert!(renders.insert(r), "two different beliefs render the same");
            } else {
                assert!(renders.contains(&r));
            }
        }
    }
    assert!(renders.len() > 500);
}

#[test]
fn empty_and_single_fact_renderings() {
    assert_eq!(Belief::new().render_text().lines().count(), 1);
    let mut b = Belief::new();
    b.record_fact(housemind::agent::Fact {
        object: "plate_1".into(),
        class: "plate".into(),
        location: Location::Floor("kitchen".into()),
        room: "kitchen".into(),
        observed_at: 0,
        source: AgentId(1),
    });
    assert_eq!(b.render_text().lines().count(), 2);
}
