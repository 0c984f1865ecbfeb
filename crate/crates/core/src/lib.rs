//! Manager/member multi-agent coordination over a symbolic household simulator.

pub mod agent;
pub mod coordination;
pub mod harness;
pub mod ids;
pub mod par;
pub mod reasoner;
pub mod summary;
pub mod world;
