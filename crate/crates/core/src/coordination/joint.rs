//! Joint macro actions: option sets, conflict checking, scoring and argmax allocation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::agent::{exploration_order, room_unexplored, MacroTask, ObjectRef};
use crate::ids::{AgentId, ObjectId, RoomId};
use crate::reasoner::{AllocatePayload, Budget, Parsed, Payload, Reasoner, ReasonerRequest, Templates, Transcript};
use crate::summary::CollaborativeSummary;
use crate::world::{GoalSpec, Location, TaskProgress};

use super::{CoordinationError, CrossAgentContext};

/// The manager is agent 1; it issues allocation and summary requests.
pub const MANAGER: AgentId = AgentId(1);

/// Relevance weight of completing an unfinished goal unit.
pub const GOAL_WEIGHT: i64 = 10;
/// Value of exploring while the goal is unfinished. Kept below
/// `GOAL_WEIGHT - (diameter + 1)` on the built-in layouts so a relevant fetch
/// always beats exploration.
pub const EXPLORE_WEIGHT: i64 = 3;
/// Bonus for exploring a room the team has not fully explored.
pub const NOVELTY_WEIGHT: i64 = 1;

/// One macro task per agent.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointAction(pub BTreeMap<AgentId, MacroTask>);

impl JointAction {
    pub fn get(&self, agent: AgentId) -> Option<&MacroTask> {
        self.0.get(&agent)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AgentId, &MacroTask)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(AgentId, MacroTask)> for JointAction {
    fn from_iter<I: IntoIterator<Item = (AgentId, MacroTask)>>(iter: I) -> Self {
        JointAction(iter.into_iter().collect())
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(a, t)| format!("{a}: {t}")).collect();
        f.write_str(&parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConflictError {
    #[error("agent {0} has no task")]
    MissingAgent(AgentId),
    #[error("agent {0} is not part of this round")]
    UnknownAgent(AgentId),
    #[error("agents {first} and {second} both target {object}")]
    SharedObject { object: ObjectId, first: AgentId, second: AgentId },
    #[error("{assigned} agents target '{predicate}' but only {remaining} unit(s) remain")]
    Oversubscribed { predicate: String, assigned: u32, remaining: u32 },
}

/// Class of a referenced object, from the team belief or the id's prefix.
pub(crate) fn object_class(context: &CrossAgentContext, object: &ObjectRef) -> String {
    match object {
        ObjectRef::Id(id) => context
            .team_belief()
            .raw_fact(id)
            .map_or_else(|| object.class().to_string(), |f| f.class.clone()),
        ObjectRef::Class(c) => c.clone(),
    }
}

/// Index of the goal predicate a fetch task contributes to.
fn predicate_of(context: &CrossAgentContext, goal: &GoalSpec, task: &MacroTask) -> Option<usize> {
    let MacroTask::FetchAndPlace { object, relation, target } = task else { return None };
    let class = object_class(context, object);
    goal.predicates
        .iter()
        .position(|p| p.relation == *relation && p.target == *target && p.class == class)
}

/// Conflict-freedom: every agent of the round assigned exactly once, no object
/// id targeted twice, and no goal predicate targeted by more agents than it has
/// units remaining.
pub fn check_conflicts(
    joint: &JointAction,
    context: &CrossAgentContext,
    goal: &GoalSpec,
    progress: &TaskProgress,
) -> Result<(), ConflictError> {
    let agents: BTreeSet<AgentId> = context.agents().collect();
    if let Some(a) = joint.0.keys().find(|a| !agents.contains(a)) {
        return Err(ConflictError::UnknownAgent(*a));
    }
    if let Some(a) = agents.iter().find(|a| !joint.0.contains_key(a)) {
        return Err(ConflictError::MissingAgent(*a));
    }
    let mut seen: BTreeMap<&ObjectId, AgentId> = BTreeMap::new();
    let mut per_pred = vec![0u32; goal.predicates.len()];
    for (&agent, task) in &joint.0 {
        if let Some(id) = task.object_id() {
            if let Some(&first) = seen.get(id) {
                return Err(ConflictError::SharedObject { object: id.clone(), first, second: agent });
            }
            seen.insert(id, agent);
        }
        if let Some(i) = predicate_of(context, goal, task) {
            per_pred[i] += 1;
        }
    }
    for (i, &assigned) in per_pred.iter().enumerate() {
        let remaining = progress.remaining(goal, i);
        if assigned > remaining {
            return Err(ConflictError::Oversubscribed {
                predicate: goal.predicates[i].to_string(),
                assigned,
                remaining,
            });
        }
    }
    Ok(())
}

fn agent_room(context: &CrossAgentContext, agent: AgentId) -> &RoomId {
    &context.entry(agent).expect("agent in context").observation.room
}

/// Exploration option offered to `agent` by the manager: the first room of
/// the team's exploration order as seen from the agent's room.
pub fn explore_option(context: &CrossAgentContext, agent: AgentId) -> Option<MacroTask> {
    let room = exploration_order(context.team_belief(), context.layout(), agent_room(context, agent))
        .into_iter()
        .next()?;
    Some(MacroTask::ExploreRoom(room))
}

/// Per-agent option list: candidate, up to `k` alternatives, the exploration
/// option, then `Idle`; duplicates removed keeping the first occurrence.
pub fn agent_options(context: &CrossAgentContext, agent: AgentId, k: usize) -> Vec<MacroTask> {
    let Some(entry) = context.entry(agent) else { return Vec::new() };
    let mut out = vec![entry.proposal.candidate.clone()];
    out.extend(entry.proposal.alternatives.iter().take(k).cloned());
    out.extend(explore_option(context, agent));
    out.push(MacroTask::Idle);
    let mut seen = BTreeSet::new();
    out.retain(|t| seen.insert(t.clone()));
    out
}

/// Cartesian product of every agent's options (last agent varies fastest),
/// filtered to conflict-free joints.
pub fn enumerate_joint_space(
    context: &CrossAgentContext,
    goal: &GoalSpec,
    progress: &TaskProgress,
    k: usize,
) -> Result<Vec<JointAction>, CoordinationError> {
    let agents: Vec<AgentId> = context.agents().collect();
    let options: Vec<Vec<MacroTask>> = agents.iter().map(|&a| agent_options(context, a, k)).collect();
    if let Some(i) = options.iter().position(Vec::is_empty) {
        return Err(CoordinationError::Contract(format!("agent {} has no options", agents[i])));
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; agents.len()];
    loop {
        let joint: JointAction = agents
            .iter()
            .zip(&idx)
            .zip(&options)
            .map(|((&a, &i), opts)| (a, opts[i].clone()))
            .collect();
        if check_conflicts(&joint, context, goal, progress).is_ok() {
            out.push(joint);
        }
        // odometer increment
        let mut pos = agents.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < options[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn unknown_distance(context: &CrossAgentContext) -> i64 {
    context.layout().diameter() as i64 + 1
}

/// Rooms between `agent` and the first waypoint of its fetch task.
fn fetch_distance(context: &CrossAgentContext, agent: AgentId, object: &ObjectRef, avoid: &Location) -> i64 {
    let layout = context.layout();
    let here = agent_room(context, agent);
    let team = context.team_belief();
    let dist_to = |f: &crate::agent::Fact| match f.location {
        Location::Hand(a) if a == agent => Some(0),
        _ => layout.distance(here, &f.room).map(i64::from),
    };
    let d = match object {
        ObjectRef::Id(id) => team.fact(id).and_then(dist_to),
        ObjectRef::Class(c) => team
            .facts()
            .filter(|f| &f.class == c && &f.location != avoid)
            .filter(|f| !matches!(f.location, Location::Hand(a) if a != agent))
            .filter_map(dist_to)
            .min(),
    };
    d.unwrap_or_else(|| unknown_distance(context))
}

/// Deterministic instantiation of the allocation objective.
///
/// Each agent contributes `10 * relevance - distance` for a fetch task,
/// `3 + novelty - distance` for exploration while the goal is unfinished and
/// 0 for `Idle`. Relevance is 1 when the task completes a still-missing goal
/// unit; assignees beyond a predicate's remaining units (in agent-id order)
/// earn none. Likewise only the first agent sent to a room earns the
/// exploration value; later ones, and all explorers once the goal is done,
/// score `-distance`.
pub fn score_joint(
    joint: &JointAction,
    context: &CrossAgentContext,
    goal: &GoalSpec,
    progress: &TaskProgress,
) -> Result<i64, CoordinationError> {
    check_conflicts(joint, context, goal, progress).map_err(CoordinationError::Conflict)?;
    let layout = context.layout();
    let team = context.team_belief();
    let mut used = vec![0u32; goal.predicates.len()];
    let mut explored: BTreeSet<&RoomId> = BTreeSet::new();
    let mut score = 0i64;
    for (&agent, task) in &joint.0 {
        score += match task {
            MacroTask::Idle => 0,
            MacroTask::ExploreRoom(r) => {
                let d = layout
                    .distance(agent_room(context, agent), r)
                    .map_or_else(|| unknown_distance(context), i64::from);
                let novelty = if room_unexplored(team, layout, r) { NOVELTY_WEIGHT } else { 0 };
                if progress.is_complete() || !explored.insert(r) {
                    -d
                } else {
                    EXPLORE_WEIGHT + novelty - d
                }
            }
            MacroTask::FetchAndPlace { object, relation, target } => {
                let goal_loc = relation.location(target);
                let already_there = match object {
                    ObjectRef::Id(id) => team.fact(id).is_some_and(|f| f.location == goal_loc),
                    ObjectRef::Class(_) => false,
                };
                let relevance = match predicate_of(context, goal, task) {
                    Some(i) if !already_there && used[i] < progress.remaining(goal, i) => {
                        used[i] += 1;
                        1
                    }
                    _ => 0,
                };
                GOAL_WEIGHT * relevance - fetch_distance(context, agent, object, &goal_loc)
            }
        };
    }
    Ok(score)
}

/// Argmax of [`score_joint`] over [`enumerate_joint_space`]; the first joint
/// in enumeration order wins ties.
pub fn heuristic_allocate(
    context: &CrossAgentContext,
    goal: &GoalSpec,
    progress: &TaskProgress,
    k: usize,
) -> Result<(JointAction, i64), CoordinationError> {
    let mut best: Option<(JointAction, i64)> = None;
    for joint in enumerate_joint_space(context, goal, progress, k)? {
        let s = score_joint(&joint, context, goal, progress)?;
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((joint, s));
        }
    }
    best.ok_or_else(|| CoordinationError::Contract("joint space is empty".into()))
}

#[derive(Debug, Clone)]
pub struct AllocationOutcome {
    pub joint: JointAction,
    pub score: Option<i64>,
    pub degraded: bool,
    pub transcripts: Vec<Transcript>,
}

/// Selects the joint action for this round through `reasoner`.
///
/// Responses that fail to parse or violate conflict-freedom are retried up to
/// `budget.max_retries` times; after that the heuristic argmax is used and the
/// outcome is flagged degraded.
#[allow(clippy::too_many_arguments)]
pub fn allocate(
    reasoner: &dyn Reasoner,
    context: &CrossAgentContext,
    summary: &CollaborativeSummary,
    progress: &TaskProgress,
    goal: &GoalSpec,
    k: usize,
    templates: &Templates,
    budget: Budget,
) -> Result<AllocationOutcome, CoordinationError> {
    let request = ReasonerRequest::new(
        context.tick,
        MANAGER,
        Payload::Allocate(AllocatePayload {
            context: context.clone(),
            summary: summary.clone(),
            progress: progress.clone(),
            goal: goal.clone(),
            k,
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
        let Ok(resp) = result else { continue };
        let Some(Parsed::Joint(joint)) = resp.parsed else { continue };
        if check_conflicts(&joint, context, goal, progress).is_err() {
            continue;
        }
        let score = score_joint(&joint, context, goal, progress).ok();
        return Ok(AllocationOutcome { joint, score, degraded: resp.degraded, transcripts });
    }
    let (joint, score) = heuristic_allocate(context, goal, progress, k)?;
    Ok(AllocationOutcome { joint, score: Some(score), degraded: true, transcripts })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::agent::{perceive, Belief};
    use crate::coordination::{assemble_context, Proposal};
    use crate::reasoner::{render_allocation_response, FixtureRecord, RequestKind, ScriptedReasoner};
    use crate::world::{evaluate_progress, observe, GoalPredicate, Layout, Relation, TaskCategory, WorldState};

    fn house() -> Arc<Layout> {
        Arc::new(
            Layout::new(
                ["bathroom", "bedroom", "kitchen", "livingroom"].map(RoomId::from),
                [("kitchen", "livingroom"), ("livingroom", "bedroom"), ("livingroom", "bathroom")]
                    .map(|(a, b)| (RoomId::from(a), RoomId::from(b))),
                [("fridge".into(), "kitchen".into())],
                [("kitchentable".into(), "kitchen".into())],
            )
            .unwrap(),
        )
    }

    fn plates(required: u32) -> GoalSpec {
        GoalSpec {
            task: TaskCategory::SetUpTable,
            predicates: vec![GoalPredicate {
                relation: Relation::On,
                class: "plate".into(),
                target: "kitchentable".into(),
                required,
            }],
        }
    }

    fn two_plates() -> WorldState {
        WorldState::new(house())
            .with_agent(AgentId(1), "kitchen")
            .with_agent(AgentId(2), "kitchen")
            .with_object("plate_1", "plate", Location::Floor("kitchen".into()))
            .with_object("plate_2", "plate", Location::Floor("kitchen".into()))
    }

    /// Beliefs from what each agent sees in `known`, observations from `now`.
    fn context(known: &WorldState, now: &WorldState, proposals: Vec<Proposal>) -> CrossAgentContext {
        let beliefs = proposals.iter().map(|p| {
            let o = observe(known, p.agent).unwrap();
            (p.agent, perceive(&o, &Belief::new(), 0))
        });
        let beliefs: Vec<_> = beliefs.collect();
        let obs: Vec<_> = proposals.iter().map(|p| observe(now, p.agent).unwrap()).collect();
        assemble_context(0, proposals, beliefs, obs, now.layout.clone()).unwrap()
    }

    fn fetch(id: &str) -> MacroTask {
        MacroTask::fetch(id, Relation::On, "kitchentable")
    }

    fn joint(tasks: &[(u32, MacroTask)]) -> JointAction {
        tasks.iter().map(|(a, t)| (AgentId(*a), t.clone())).collect()
    }

    #[test]
    fn all_idle_scores_zero() {
        let s = two_plates();
        let goal = plates(2);
        let x = context(&s, &s, vec![Proposal::new(AgentId(1), MacroTask::Idle, ""), Proposal::new(AgentId(2), MacroTask::Idle, "")]);
        let p = evaluate_progress(&s, &goal);
        let j = joint(&[(1, MacroTask::Idle), (2, MacroTask::Idle)]);
        assert_eq!(score_joint(&j, &x, &goal, &p).unwrap(), 0);
    }

    #[test]
    fn relevant_fetch_two_rooms_away_scores_eight() {
        let known = WorldState::new(house())
            .with_agent(AgentId(1), "kitchen")
            .with_object("plate_1", "plate", Location::Floor("kitchen".into()));
        let mut now = known.clone();
        now.agents.get_mut(&AgentId(1)).unwrap().room = "bedroom".into();
        let goal = plates(1);
        let x = context(&known, &now, vec![Proposal::new(AgentId(1), fetch("plate_1"), "")]);
        let p = evaluate_progress(&now, &goal);
        assert_eq!(score_joint(&joint(&[(1, fetch("plate_1"))]), &x, &goal, &p).unwrap(), 8);
    }

    #[test]
    fn conflict_checks() {
        let s = two_plates();
        let x = context(&s, &s, vec![Proposal::new(AgentId(1), fetch("plate_1"), ""), Proposal::new(AgentId(2), fetch("plate_1"), "")]);
        let goal = plates(2);
        let p = evaluate_progress(&s, &goal);
        let shared = joint(&[(1, fetch("plate_1")), (2, fetch("plate_1"))]);
        assert!(matches!(check_conflicts(&shared, &x, &goal, &p), Err(ConflictError::SharedObject { .. })));
        assert!(matches!(score_joint(&shared, &x, &goal, &p), Err(CoordinationError::Conflict(_))));
        let missing = joint(&[(1, fetch("plate_1"))]);
        assert_eq!(check_conflicts(&missing, &x, &goal, &p), Err(ConflictError::MissingAgent(AgentId(2))));
        let extra = joint(&[(1, MacroTask::Idle), (2, MacroTask::Idle), (3, MacroTask::Idle)]);
        assert_eq!(check_conflicts(&extra, &x, &goal, &p), Err(ConflictError::UnknownAgent(AgentId(3))));
        let both = joint(&[(1, fetch("plate_1")), (2, fetch("plate_2"))]);
        assert_eq!(check_conflicts(&both, &x, &goal, &p), Ok(()));
        // only one plate still needed
        let one = plates(1);
        let p1 = evaluate_progress(&s, &one);
        assert!(matches!(
            check_conflicts(&both, &x, &one, &p1),
            Err(ConflictError::Oversubscribed { assigned: 2, remaining: 1, .. })
        ));
    }

    #[test]
    fn contention_on_one_plate_is_split() {
        let s = two_plates();
        let mut second = Proposal::new(AgentId(2), fetch("plate_1"), "");
        second.alternatives = vec![fetch("plate_2")];
        let x = context(&s, &s, vec![Proposal::new(AgentId(1), fetch("plate_1"), ""), second]);
        let goal = plates(2);
        let p = evaluate_progress(&s, &goal);
        let (j, score) = heuristic_allocate(&x, &goal, &p, 3).unwrap();
        assert_eq!(j, joint(&[(1, fetch("plate_1")), (2, fetch("plate_2"))]));
        assert_eq!(score, 20);
        // strictly better than every joint leaving an agent off the goal
        for other in enumerate_joint_space(&x, &goal, &p, 3).unwrap() {
            if other != j {
                assert!(score_joint(&other, &x, &goal, &p).unwrap() < score);
            }
        }
    }

    #[test]
    fn single_relevant_proposal_is_kept() {
        let s = WorldState::new(house())
            .with_agent(AgentId(1), "kitchen")
            .with_object("plate_1", "plate", Location::Floor("kitchen".into()));
        let x = context(&s, &s, vec![Proposal::new(AgentId(1), fetch("plate_1"), "")]);
        let goal = plates(1);
        let p = evaluate_progress(&s, &goal);
        assert_eq!(heuristic_allocate(&x, &goal, &p, 3).unwrap().0, joint(&[(1, fetch("plate_1"))]));
    }

    #[test]
    fn lone_explored_room_leaves_only_idle() {
        let layout = Arc::new(
            Layout::new(["kitchen".into()], [], [], [("kitchentable".into(), "kitchen".into())]).unwrap(),
        );
        let s = WorldState::new(layout).with_agent(AgentId(1), "kitchen");
        let x = context(&s, &s, vec![Proposal::new(AgentId(1), MacroTask::Idle, "")]);
        let goal = plates(1);
        let p = evaluate_progress(&s, &goal);
        assert_eq!(agent_options(&x, AgentId(1), 3), vec![MacroTask::Idle]);
        assert_eq!(enumerate_joint_space(&x, &goal, &p, 3).unwrap().len(), 1);
    }

    #[test]
    fn options_are_deduplicated_and_capped() {
        let s = two_plates();
        let mut p = Proposal::new(AgentId(1), MacroTask::ExploreRoom("kitchen".into()), "");
        p.alternatives = vec![
            fetch("plate_1"),
            MacroTask::Idle,
            fetch("plate_2"),
            MacroTask::ExploreRoom("bedroom".into()),
        ];
        let x = context(&s, &s, vec![p]);
        // the closed fridge keeps the kitchen first in exploration order
        assert_eq!(explore_option(&x, AgentId(1)), Some(MacroTask::ExploreRoom("kitchen".into())));
        assert_eq!(
            agent_options(&x, AgentId(1), 3),
            vec![MacroTask::ExploreRoom("kitchen".into()), fetch("plate_1"), MacroTask::Idle, fetch("plate_2")]
        );
    }

    #[test]
    fn shared_only_option_is_never_paired() {
        let s = two_plates();
        let x = context(&s, &s, vec![Proposal::new(AgentId(1), fetch("plate_1"), ""), Proposal::new(AgentId(2), fetch("plate_1"), "")]);
        let goal = plates(2);
        let p = evaluate_progress(&s, &goal);
        let space = enumerate_joint_space(&x, &goal, &p, 3).unwrap();
        assert!(!space.is_empty());
        assert!(space.iter().all(|j| check_conflicts(j, &x, &goal, &p).is_ok()));
        assert!(!space.contains(&joint(&[(1, fetch("plate_1")), (2, fetch("plate_1"))])));
    }

    fn scripted_allocation(texts: &[String]) -> ScriptedReasoner {
        ScriptedReasoner::new(texts.iter().map(|t| FixtureRecord {
            kind: RequestKind::Allocate,
            tick: 0,
            agent: MANAGER,
            response_text: t.clone(),
            error: None,
        }))
    }

    #[test]
    fn malformed_then_conflicting_responses_fall_back() {
        let s = two_plates();
        let x = context(&s, &s, vec![Proposal::new(AgentId(1), fetch("plate_1"), ""), Proposal::new(AgentId(2), fetch("plate_2"), "")]);
        let goal = plates(2);
        let p = evaluate_progress(&s, &goal);
        let conflicting = render_allocation_response(&joint(&[(1, fetch("plate_1")), (2, fetch("plate_1"))]));
        let r = scripted_allocation(&["no fenced block here".into(), conflicting.clone(), conflicting]);
        let budget = Budget::default();
        let out = allocate(&r, &x, &CollaborativeSummary::new(), &p, &goal, 3, &Templates::default(), budget).unwrap();
        assert!(out.degraded);
        assert_eq!(out.transcripts.len(), budget.max_retries as usize + 1);
        assert_eq!(r.remaining(), 0);
        assert_eq!(out.joint, heuristic_allocate(&x, &goal, &p, 3).unwrap().0);
    }

    #[test]
    fn valid_response_is_taken_verbatim() {
        let s = two_plates();
        let x = context(&s, &s, vec![Proposal::new(AgentId(1), fetch("plate_1"), ""), Proposal::new(AgentId(2), fetch("plate_2"), "")]);
        let goal = plates(2);
        let p = evaluate_progress(&s, &goal);
        // deliberately not the argmax
        let chosen = joint(&[(1, MacroTask::Idle), (2, fetch("plate_1"))]);
        let r = scripted_allocation(&[render_allocation_response(&chosen)]);
        let out = allocate(&r, &x, &CollaborativeSummary::new(), &p, &goal, 3, &Templates::default(), Budget::default())
            .unwrap();
        assert_eq!((out.joint, out.degraded, out.transcripts.len()), (chosen, false, 1));
    }
}
