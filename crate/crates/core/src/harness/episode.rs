use std::collections::BTreeMap;

use crate::agent::{
    expand_macro, merge_team_belief, perceive, AgentSelf, Belief, History, HistoryRecord, MacroTask,
};
use crate::coordination::{
    allocate, assemble_context, make_proposal, AgentView, JointAction, Proposal, MANAGER,
};
use crate::ids::{AgentId, Tick};
use crate::par::{self, ExecMode};
use crate::reasoner::{HeuristicReasoner, Reasoner, RemoteReasoner, ScriptedReasoner};
use crate::summary::{summarize, CollaborativeSummary, SummaryTracker};
use crate::world::{
    evaluate_progress, observe, transition, Catalog, Event, GoalSpec, Observation, TaskProgress,
    WorldState, CATALOG_VERSION,
};

use super::{BackendKind, EpisodeConfig, EpisodeTrace, ExecutionMode, HarnessError, TraceRecord, TRACE_FORMAT_VERSION};

/// Own-history records handed to a proposer.
const PROPOSAL_HISTORY: usize = 12;

/// The two role backends of one run.
pub struct Reasoners {
    pub manager: Box<dyn Reasoner>,
    pub members: Box<dyn Reasoner>,
}

impl Reasoners {
    pub fn heuristic() -> Self {
        Self { manager: Box::new(HeuristicReasoner), members: Box::new(HeuristicReasoner) }
    }
}

fn build_one(kind: BackendKind, config: &EpisodeConfig) -> Result<Box<dyn Reasoner>, HarnessError> {
    Ok(match kind {
        BackendKind::Heuristic => Box::new(HeuristicReasoner),
        BackendKind::Remote => Box::new(RemoteReasoner::new(config.remote.clone().unwrap_or_default())),
        BackendKind::Scripted => {
            let path = config
                .fixtures
                .as_ref()
                .ok_or_else(|| HarnessError::Config("scripted backend needs a fixtures file".into()))?;
            Box::new(
                ScriptedReasoner::from_path(path)
                    .map_err(|e| HarnessError::Config(format!("fixtures {}: {e}", path.display())))?,
            )
        }
    })
}

/// Instantiates the configured backends. Remote credentials come from the environment.
pub fn build_reasoners(config: &EpisodeConfig) -> Result<Reasoners, HarnessError> {
    Ok(Reasoners {
        manager: build_one(config.backends.manager, config)?,
        members: build_one(config.backends.members, config)?,
    })
}

/// Runs one episode with the configured backends against the embedded catalog.
pub fn run_episode(config: &EpisodeConfig) -> Result<EpisodeTrace, HarnessError> {
    config.validate()?;
    let r = build_reasoners(config)?;
    run_episode_with(config, Catalog::builtin(), r.manager.as_ref(), r.members.as_ref())
}

/// Runs one episode with explicit backends and catalog.
///
/// Internal contract violations abort the episode; the returned
/// [`HarnessError::Aborted`] carries the trace up to that point.
pub fn run_episode_with(
    config: &EpisodeConfig,
    catalog: &Catalog,
    manager: &dyn Reasoner,
    members: &dyn Reasoner,
) -> Result<EpisodeTrace, HarnessError> {
    config.validate()?;
    let (world, goal) = catalog.init_world(config.task, config.num_agents, config.seed)?;
    let mut trace = EpisodeTrace {
        records: vec![TraceRecord::Header {
            format_version: TRACE_FORMAT_VERSION,
            template_version: config.templates.version.clone(),
            catalog_version: CATALOG_VERSION,
            config: config.clone(),
        }],
    };
    let mut ep = Episode {
        config,
        goal,
        world,
        manager,
        members,
        beliefs: BTreeMap::new(),
        history: History::new(),
        tracker: None,
        steps: 0,
    };
    match ep.run(&mut trace.records) {
        Ok(terminal) => {
            trace.records.push(terminal);
            Ok(trace)
        }
        Err(message) => {
            trace.records.push(TraceRecord::Terminal {
                success: false,
                step_count: ep.steps,
                progress: evaluate_progress(&ep.world, &ep.goal),
                error: Some(message.clone()),
            });
            Err(HarnessError::Aborted { message, trace: Box::new(trace) })
        }
    }
}

struct Episode<'a> {
    config: &'a EpisodeConfig,
    goal: GoalSpec,
    world: WorldState,
    manager: &'a dyn Reasoner,
    members: &'a dyn Reasoner,
    beliefs: BTreeMap<AgentId, Belief>,
    history: History,
    tracker: Option<SummaryTracker>,
    steps: u64,
}

fn transcripts(out: &mut Vec<TraceRecord>, ts: impl IntoIterator<Item = crate::reasoner::Transcript>) {
    out.extend(ts.into_iter().map(|transcript| TraceRecord::Transcript { transcript }));
}

impl Episode<'_> {
    fn run(&mut self, out: &mut Vec<TraceRecord>) -> Result<TraceRecord, String> {
        let agents: Vec<AgentId> = self.world.agent_ids().collect();
        loop {
            let t = self.world.tick;
            let obs: Vec<Observation> = agents
                .iter()
                .map(|&a| observe(&self.world, a))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            for o in &obs {
                let b = self.beliefs.entry(o.agent).or_default();
                *b = perceive(o, b, t);
            }
            let team = merge_team_belief(self.beliefs.values());
            let truth = evaluate_progress(&self.world, &self.goal);
            let team_progress = evaluate_progress(&team, &self.goal);
            out.push(TraceRecord::Tick {
                tick: t,
                progress: truth.clone(),
                team_progress: team_progress.clone(),
                observations: obs.iter().map(|o| (o.agent, o.digest())).collect(),
            });
            if self.config.summary_enabled {
                self.summary_step(t, &team_progress, out)?;
            }
            if truth.is_complete() || self.steps >= self.config.max_steps {
                return Ok(TraceRecord::Terminal {
                    success: truth.is_complete(),
                    step_count: self.steps,
                    progress: truth,
                    error: None,
                });
            }

            let proposals = self.negotiate(t, &obs, &team_progress, out);
            let (joint, mode) = if self.config.allocation_enabled {
                self.allocate(t, &proposals, &obs, &team_progress, out)?
            } else {
                let joint: JointAction = proposals.iter().map(|p| (p.agent, p.candidate.clone())).collect();
                out.push(TraceRecord::Allocation {
                    tick: t,
                    mode: ExecutionMode::SelfExecuted,
                    joint: joint.clone(),
                    score: None,
                    degraded: proposals.iter().any(|p| p.degraded),
                });
                (joint, ExecutionMode::SelfExecuted)
            };
            self.execute(t, &joint, mode, &team, &obs, out)?;
        }
    }

    /// Progress-triggered summary step; the first call only records the initial progress.
    fn summary_step(&mut self, t: Tick, progress: &TaskProgress, out: &mut Vec<TraceRecord>) -> Result<(), String> {
        let Some(tracker) = &mut self.tracker else {
            self.tracker = Some(SummaryTracker::new(progress.clone()));
            return Ok(());
        };
        let (manager, goal, config) = (self.manager, &self.goal, self.config);
        let mut calls = Vec::new();
        let summary = tracker
            .step(t, progress, &self.history, |records, delta, lower, upper| {
                let o = summarize(
                    manager,
                    MANAGER,
                    records,
                    delta,
                    lower,
                    upper,
                    goal,
                    &config.templates,
                    config.budget,
                )?;
                calls = o.transcripts;
                Ok((o.text, o.degraded))
            })
            .map_err(|e| e.to_string())?
            .cloned();
        transcripts(out, calls);
        if let Some(summary) = summary {
            out.push(TraceRecord::Summary { tick: t, summary });
        }
        Ok(())
    }

    fn negotiate(
        &self,
        t: Tick,
        obs: &[Observation],
        progress: &TaskProgress,
        out: &mut Vec<TraceRecord>,
    ) -> Vec<Proposal> {
        let views: Vec<AgentView> = obs
            .iter()
            .map(|o| AgentView {
                agent: o.agent,
                observation: o.clone(),
                belief: self.beliefs[&o.agent].clone(),
                history: self.history.window(o.agent, 0, Some(PROPOSAL_HISTORY)),
                progress: progress.clone(),
                goal: self.goal.clone(),
                layout: self.world.layout.clone(),
                k: self.config.k,
            })
            .collect();
        let (manager, members, config) = (self.manager, self.members, self.config);
        let outcomes = par::map(ExecMode::Parallel, views, |v| {
            let backend = if v.agent == MANAGER { manager } else { members };
            make_proposal(backend, v, t, &config.templates, config.budget)
        });
        let mut proposals = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            transcripts(out, o.transcripts);
            proposals.push(o.proposal);
        }
        out.push(TraceRecord::Negotiation { tick: t, proposals: proposals.clone() });
        proposals
    }

    fn allocate(
        &self,
        t: Tick,
        proposals: &[Proposal],
        obs: &[Observation],
        progress: &TaskProgress,
        out: &mut Vec<TraceRecord>,
    ) -> Result<(JointAction, ExecutionMode), String> {
        let context = assemble_context(
            t,
            proposals.iter().cloned(),
            self.beliefs.iter().map(|(a, b)| (*a, b.clone())),
            obs.iter().cloned(),
            self.world.layout.clone(),
        )
        .map_err(|e| e.to_string())?;
        let empty = CollaborativeSummary::new();
        let summary = match (&self.tracker, self.config.summary_enabled) {
            (Some(tr), true) => tr.collaborative(),
            _ => &empty,
        };
        let a = allocate(
            self.manager,
            &context,
            summary,
            progress,
            &self.goal,
            self.config.k,
            &self.config.templates,
            self.config.budget,
        )
        .map_err(|e| e.to_string())?;
        transcripts(out, a.transcripts);
        out.push(TraceRecord::Allocation {
            tick: t,
            mode: ExecutionMode::Allocated,
            joint: a.joint.clone(),
            score: a.score,
            degraded: a.degraded,
        });
        Ok((a.joint, ExecutionMode::Allocated))
    }

    /// Expands every agent's task against the belief it acts on and advances the world.
    fn execute(
        &mut self,
        t: Tick,
        joint: &JointAction,
        mode: ExecutionMode,
        team: &Belief,
        obs: &[Observation],
        out: &mut Vec<TraceRecord>,
    ) -> Result<(), String> {
        let layout = self.world.layout.clone();
        let mut actions = BTreeMap::new();
        let mut events: Vec<Event> = Vec::new();
        for o in obs {
            let task = joint.get(o.agent).unwrap_or(&MacroTask::Idle);
            let belief = match mode {
                ExecutionMode::Allocated => team,
                ExecutionMode::SelfExecuted => &self.beliefs[&o.agent],
            };
            let e = expand_macro(task, belief, &AgentSelf::from_observation(o), &layout);
            actions.insert(o.agent, e.action);
            events.extend(e.failure);
        }
        let primitives: Vec<_> = actions.iter().map(|(a, p)| (*a, p.clone())).collect();
        let (next, applied) = transition(&self.world, &primitives).map_err(|e| e.to_string())?;
        events.extend(applied);
        events.sort_by_key(Event::agent);
        for (&agent, action) in &actions {
            self.history
                .push(HistoryRecord {
                    tick: next.tick,
                    agent,
                    action: action.clone(),
                    events: events.iter().filter(|e| e.agent() == agent).cloned().collect(),
                    belief_digest: self.beliefs[&agent].digest(),
                })
                .map_err(|e| format!("history: {e}"))?;
        }
        out.push(TraceRecord::Step { tick: t, actions, events });
        self.world = next;
        self.steps += 1;
        Ok(())
    }
}
