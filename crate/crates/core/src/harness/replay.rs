use crate::reasoner::{HeuristicReasoner, Reasoner, ScriptedReasoner};
use crate::world::Catalog;

use super::{run_episode_with, BackendKind, EpisodeTrace, HarnessError};

/// Re-executes a recorded episode, answering every non-heuristic role from
/// the trace's own transcripts.
pub fn replay(trace: &EpisodeTrace) -> Result<EpisodeTrace, HarnessError> {
    replay_in(trace, Catalog::builtin())
}

pub fn replay_in(trace: &EpisodeTrace, catalog: &Catalog) -> Result<EpisodeTrace, HarnessError> {
    let config = trace
        .config()
        .ok_or_else(|| HarnessError::Trace("trace without header".into()))?
        .clone();
    let scripted = ScriptedReasoner::from_transcripts(trace.transcripts());
    let pick = |k: BackendKind| -> &dyn Reasoner {
        match k {
            BackendKind::Heuristic => &HeuristicReasoner,
            _ => &scripted,
        }
    };
    let (manager, members) = (pick(config.backends.manager), pick(config.backends.members));
    run_episode_with(&config, catalog, manager, members)
}
