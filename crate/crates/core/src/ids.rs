//! Identifier newtypes shared by every module.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Simulation timestep.
pub type Tick = u64;

/// Agents are numbered from 1; agent 1 doubles as the manager.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

// Accepts strings too: JSON map keys arrive as strings, and inside internally
// tagged enums serde no longer coerces them back to integers.
impl<'de> Deserialize<'de> for AgentId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = AgentId;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an agent id")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<AgentId, E> {
                u32::try_from(v).map(AgentId).map_err(|_| E::custom(format!("agent id {v} out of range")))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<AgentId, E> {
                u64::try_from(v).map_err(|_| E::custom(format!("negative agent id {v}"))).and_then(|v| self.visit_u64(v))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<AgentId, E> {
                v.parse().map(AgentId).map_err(|_| E::custom(format!("bad agent id {v:?}")))
            }
        }
        d.deserialize_any(V)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }
    };
}

string_id!(
    /// A room of the house, e.g. `kitchen`.
    RoomId
);
string_id!(
    /// A movable object, e.g. `plate_2`.
    ObjectId
);
string_id!(
    /// A container or surface fixed to a room, e.g. `fridge` or `kitchentable`.
    FixtureId
);

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    #[test]
    fn agent_id_from_number_or_key() {
        assert_eq!(serde_json::from_str::<AgentId>("3").unwrap(), AgentId(3));
        let m: BTreeMap<AgentId, u8> = serde_json::from_str(r#"{"2":1}"#).unwrap();
        assert_eq!(m.keys().next(), Some(&AgentId(2)));
        assert!(serde_json::from_str::<AgentId>("-1").is_err());
        assert!(serde_json::from_str::<AgentId>(r#""x""#).is_err());
    }
}
