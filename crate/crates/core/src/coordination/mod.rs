//! Manager-side coordination: proposals, cross-agent context and joint allocation.

mod context;
mod joint;
mod proposal;

pub use context::{assemble_context, ContextEntry, CrossAgentContext};
pub use joint::{
    agent_options, allocate, check_conflicts, enumerate_joint_space, explore_option, heuristic_allocate,
    score_joint, AllocationOutcome, ConflictError, JointAction, EXPLORE_WEIGHT, GOAL_WEIGHT, MANAGER, NOVELTY_WEIGHT,
};
pub use proposal::{
    fallback_proposal, fetch_options, heuristic_proposal, make_proposal, AgentView, Proposal, ProposalOutcome,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoordinationError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("conflicting joint action: {0}")]
    Conflict(#[from] ConflictError),
}
