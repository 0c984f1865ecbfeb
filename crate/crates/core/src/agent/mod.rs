//! Per-agent perception, memory and execution.

mod belief;
mod execute;
mod history;
mod macro_task;
mod render;

pub use belief::{
    merge_team_belief, perceive, AgentBelief, AgentFact, Belief, ContainerFact, Fact, TeamBelief,
};
pub use execute::{
    expand_macro, exploration_order, exploration_target, room_unexplored, AgentSelf, Expansion,
};
pub use history::{History, HistoryRecord};
pub use macro_task::{MacroSyntaxError, MacroTask, ObjectRef};
pub use render::RenderText;
