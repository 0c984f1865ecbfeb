use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ids::{FixtureId, ObjectId, RoomId};
use crate::world::Relation;

/// Which object a fetch task names: a specific id or any object of a class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjectRef {
    Id(ObjectId),
    Class(String),
}

impl ObjectRef {
    /// Object ids are `<class>_<n>`; anything else names a class.
    pub fn parse(token: &str) -> ObjectRef {
        match token.rsplit_once('_') {
            Some((class, n))
                if !class.is_empty() && !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) =>
            {
                ObjectRef::Id(token.into())
            }
            _ => ObjectRef::Class(token.to_string()),
        }
    }

    /// Class implied by the reference (ids carry their class as prefix).
    pub fn class(&self) -> &str {
        match self {
            ObjectRef::Id(id) => id.as_str().rsplit_once('_').map_or(id.as_str(), |(c, _)| c),
            ObjectRef::Class(c) => c,
        }
    }
}

impl fmt::Display for ObjectRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectRef::Id(id) => write!(f, "{id}"),
            ObjectRef::Class(c) => f.write_str(c),
        }
    }
}

/// High-level assignment expanded tick by tick into primitives.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum MacroTask {
    FetchAndPlace { object: ObjectRef, relation: Relation, target: FixtureId },
    ExploreRoom(RoomId),
    Idle,
}

impl MacroTask {
    pub fn fetch(object: impl Into<ObjectId>, relation: Relation, target: impl Into<FixtureId>) -> Self {
        MacroTask::FetchAndPlace { object: ObjectRef::Id(object.into()), relation, target: target.into() }
    }

    pub fn object_id(&self) -> Option<&ObjectId> {
        match self {
            MacroTask::FetchAndPlace { object: ObjectRef::Id(id), .. } => Some(id),
            _ => None,
        }
    }
}

impl fmt::Display for MacroTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MacroTask::FetchAndPlace { object, relation, target } => {
                write!(f, "FetchAndPlace({object}, {relation}, {target})")
            }
            MacroTask::ExploreRoom(r) => write!(f, "ExploreRoom({r})"),
            MacroTask::Idle => f.write_str("Idle()"),
        }
    }
}

/// Grammar errors for a single `Name(args)` macro term.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MacroSyntaxError {
    #[error("expected Name(args), got {0:?}")]
    Shape(String),
    #[error("unknown macro {0:?}")]
    UnknownMacro(String),
    #[error("{name} takes {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("{0}")]
    BadArgument(String),
}

impl FromStr for MacroTask {
    type Err = MacroSyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, args) = s
            .strip_suffix(')')
            .and_then(|s| s.split_once('('))
            .ok_or_else(|| MacroSyntaxError::Shape(s.to_string()))?;
        let name = name.trim();
        let args: Vec<&str> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',').map(str::trim).collect()
        };
        let arity = |expected: usize| {
            if args.len() == expected && args.iter().all(|a| !a.is_empty()) {
                Ok(())
            } else {
                Err(MacroSyntaxError::Arity { name: name.to_string(), expected, got: args.len() })
            }
        };
        match name {
            "FetchAndPlace" => {
                arity(3)?;
                let relation = args[1].parse().map_err(MacroSyntaxError::BadArgument)?;
                Ok(MacroTask::FetchAndPlace {
                    object: ObjectRef::parse(args[0]),
                    relation,
                    target: args[2].into(),
                })
            }
            "ExploreRoom" => {
                arity(1)?;
                Ok(MacroTask::ExploreRoom(args[0].into()))
            }
            "Idle" => {
                arity(0)?;
                Ok(MacroTask::Idle)
            }
            other => Err(MacroSyntaxError::UnknownMacro(other.to_string())),
        }
    }
}

impl From<MacroTask> for String {
    fn from(m: MacroTask) -> Self {
        m.to_string()
    }
}

impl TryFrom<String> for MacroTask {
    type Error = MacroSyntaxError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_round_trip() {
        for m in [
            MacroTask::fetch("plate_2", Relation::On, "kitchentable"),
            MacroTask::FetchAndPlace {
                object: ObjectRef::Class("milk".into()),
                relation: Relation::In,
                target: "fridge".into(),
            },
            MacroTask::ExploreRoom("bedroom".into()),
            MacroTask::Idle,
        ] {
            assert_eq!(m.to_string().parse::<MacroTask>().unwrap(), m);
        }
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!("Dance(x)".parse::<MacroTask>(), Err(MacroSyntaxError::UnknownMacro(_))));
        assert!(matches!("Idle(x)".parse::<MacroTask>(), Err(MacroSyntaxError::Arity { .. })));
        assert!(matches!(
            "FetchAndPlace(plate_1, ON)".parse::<MacroTask>(),
            Err(MacroSyntaxError::Arity { .. })
        ));
        assert!(matches!(
            "FetchAndPlace(plate_1, UNDER, sink)".parse::<MacroTask>(),
            Err(MacroSyntaxError::BadArgument(_))
        ));
        assert!(matches!("Idle".parse::<MacroTask>(), Err(MacroSyntaxError::Shape(_))));
    }

    #[test]
    fn object_ref_classes() {
        assert_eq!(ObjectRef::parse("plate_12"), ObjectRef::Id("plate_12".into()));
        assert_eq!(ObjectRef::parse("plate"), ObjectRef::Class("plate".into()));
        assert_eq!(ObjectRef::parse("plate_x"), ObjectRef::Class("plate_x".into()));
        assert_eq!(ObjectRef::parse("teabag_1").class(), "teabag");
    }
}
