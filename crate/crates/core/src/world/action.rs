use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ids::{AgentId, FixtureId, ObjectId, RoomId};

use super::Location;

/// One atomic action for one agent for one tick.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ActionPrimitive {
    GoTo(RoomId),
    Grab(ObjectId),
    Open(FixtureId),
    Close(FixtureId),
    PutOn(FixtureId),
    PutIn(FixtureId),
    Explore,
    Wait,
}

impl fmt::Display for ActionPrimitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionPrimitive::GoTo(r) => write!(f, "GoTo({r})"),
            ActionPrimitive::Grab(o) => write!(f, "Grab({o})"),
            ActionPrimitive::Open(c) => write!(f, "Open({c})"),
            ActionPrimitive::Close(c) => write!(f, "Close({c})"),
            ActionPrimitive::PutOn(s) => write!(f, "PutOn({s})"),
            ActionPrimitive::PutIn(c) => write!(f, "PutIn({c})"),
            ActionPrimitive::Explore => f.write_str("Explore"),
            ActionPrimitive::Wait => f.write_str("Wait"),
        }
    }
}

impl FromStr for ActionPrimitive {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Explore" => return Ok(ActionPrimitive::Explore),
            "Wait" => return Ok(ActionPrimitive::Wait),
            _ => {}
        }
        let (name, arg) = s
            .strip_suffix(')')
            .and_then(|s| s.split_once('('))
            .ok_or_else(|| format!("bad action {s:?}"))?;
        let arg = arg.trim();
        if arg.is_empty() {
            return Err(format!("missing argument in {s:?}"));
        }
        Ok(match name {
            "GoTo" => ActionPrimitive::GoTo(arg.into()),
            "Grab" => ActionPrimitive::Grab(arg.into()),
            "Open" => ActionPrimitive::Open(arg.into()),
            "Close" => ActionPrimitive::Close(arg.into()),
            "PutOn" => ActionPrimitive::PutOn(arg.into()),
            "PutIn" => ActionPrimitive::PutIn(arg.into()),
            _ => return Err(format!("unknown action {name:?}")),
        })
    }
}

impl From<ActionPrimitive> for String {
    fn from(a: ActionPrimitive) -> Self {
        a.to_string()
    }
}

impl TryFrom<String> for ActionPrimitive {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Outcome of applying a primitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Moved { agent: AgentId, from: RoomId, to: RoomId },
    Grabbed { agent: AgentId, object: ObjectId, class: String, from: Location },
    Opened { agent: AgentId, container: FixtureId },
    Closed { agent: AgentId, container: FixtureId },
    Placed { agent: AgentId, object: ObjectId, class: String, to: Location },
    Explored { agent: AgentId, room: RoomId },
    Waited { agent: AgentId },
    Failure { agent: AgentId, action: ActionPrimitive, reason: String },
    Conflict { agent: AgentId, action: ActionPrimitive, winner: AgentId },
}

impl Event {
    pub fn agent(&self) -> AgentId {
        match self {
            Event::Moved { agent, .. }
            | Event::Grabbed { agent, .. }
            | Event::Opened { agent, .. }
            | Event::Closed { agent, .. }
            | Event::Placed { agent, .. }
            | Event::Explored { agent, .. }
            | Event::Waited { agent }
            | Event::Failure { agent, .. }
            | Event::Conflict { agent, .. } => *agent,
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Event::Failure { .. })
    }

    pub fn is_conflict(&self) -> bool {
        matches!(self, Event::Conflict { .. })
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Moved { agent, from, to } => write!(f, "agent {agent} moved {from} -> {to}"),
            Event::Grabbed { agent, object, from, .. } => {
                write!(f, "agent {agent} grabbed {object} from {from}")
            }
            Event::Opened { agent, container } => write!(f, "agent {agent} opened {container}"),
            Event::Closed { agent, container } => write!(f, "agent {agent} closed {container}"),
            Event::Placed { agent, object, to, .. } => {
                write!(f, "agent {agent} placed {object} {to}")
            }
            Event::Explored { agent, room } => write!(f, "agent {agent} explored {room}"),
            Event::Waited { agent } => write!(f, "agent {agent} waited"),
            Event::Failure { agent, action, reason } => {
                write!(f, "agent {agent} failed {action}: {reason}")
            }
            Event::Conflict { agent, action, winner } => {
                write!(f, "agent {agent} lost {action} to agent {winner}")
            }
        }
    }
}
