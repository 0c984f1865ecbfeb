use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ids::FixtureId;

use super::{Location, WorldError, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskCategory {
    WashDishes,
    PutGroceries,
    PrepareAMeal,
    SetUpTable,
    PrepareTea,
}

impl TaskCategory {
    pub const ALL: [TaskCategory; 5] = [
        TaskCategory::WashDishes,
        TaskCategory::PutGroceries,
        TaskCategory::PrepareAMeal,
        TaskCategory::SetUpTable,
        TaskCategory::PrepareTea,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskCategory::WashDishes => "WashDishes",
            TaskCategory::PutGroceries => "PutGroceries",
            TaskCategory::PrepareAMeal => "PrepareAMeal",
            TaskCategory::SetUpTable => "SetUpTable",
            TaskCategory::PrepareTea => "PrepareTea",
        }
    }
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskCategory {
    type Err = WorldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        TaskCategory::ALL
            .into_iter()
            .find(|t| t.name().to_lowercase() == norm)
            .ok_or_else(|| WorldError::Config(format!("unknown task category {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "ON")]
    On,
    #[serde(rename = "IN")]
    In,
}

impl Relation {
    pub fn location(self, target: &FixtureId) -> Location {
        match self {
            Relation::On => Location::On(target.clone()),
            Relation::In => Location::In(target.clone()),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::On => "ON",
            Relation::In => "IN",
        })
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ON" | "on" => Ok(Relation::On),
            "IN" | "in" => Ok(Relation::In),
            _ => Err(format!("unknown relation {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalPredicate {
    pub relation: Relation,
    pub class: String,
    pub target: FixtureId,
    pub required: u32,
}

impl GoalPredicate {
    pub fn matches(&self, class: &str, location: &Location) -> bool {
        self.class == class && *location == self.relation.location(&self.target)
    }
}

impl fmt::Display for GoalPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} x{}", self.relation, self.class, self.target, self.required)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub task: TaskCategory,
    pub predicates: Vec<GoalPredicate>,
}

impl GoalSpec {
    pub fn total(&self) -> u32 {
        self.predicates.iter().map(|p| p.required).sum()
    }
}

/// Satisfied goal units out of the episode total, with the per-predicate breakdown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskProgress {
    pub satisfied: u32,
    pub total: u32,
    pub per_predicate: Vec<u32>,
}

impl TaskProgress {
    pub fn is_complete(&self) -> bool {
        self.satisfied == self.total
    }

    /// Units still missing for predicate `i`.
    pub fn remaining(&self, goal: &GoalSpec, i: usize) -> u32 {
        goal.predicates[i].required - self.per_predicate.get(i).copied().unwrap_or(0)
    }
}

impl fmt::Display for TaskProgress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.satisfied, self.total)
    }
}

/// Anything that can enumerate (class, location) placements: ground truth or a belief.
pub trait Placements {
    fn for_each_placement(&self, f: &mut dyn FnMut(&str, &Location));
}

impl Placements for WorldState {
    fn for_each_placement(&self, f: &mut dyn FnMut(&str, &Location)) {
        for o in self.objects.values() {
            f(&o.class, &o.location);
        }
    }
}

/// Counts goal units satisfied, capping each predicate at its required count.
pub fn evaluate_progress(source: &impl Placements, goal: &GoalSpec) -> TaskProgress {
    let mut counts = vec![0u32; goal.predicates.len()];
    source.for_each_placement(&mut |class, loc| {
        for (i, p) in goal.predicates.iter().enumerate() {
            if p.matches(class, loc) {
                counts[i] += 1;
            }
        }
    });
    let per_predicate: Vec<u32> = counts
        .iter()
        .zip(&goal.predicates)
        .map(|(&c, p)| c.min(p.required))
        .collect();
    TaskProgress {
        satisfied: per_predicate.iter().sum(),
        total: goal.total(),
        per_predicate,
    }
}

/// Shared reward: change in satisfied units.
pub fn reward(before: &TaskProgress, after: &TaskProgress) -> Result<i64, WorldError> {
    if before.total != after.total {
        return Err(WorldError::Contract(format!(
            "progress totals differ: {} vs {}",
            before.total, after.total
        )));
    }
    Ok(after.satisfied as i64 - before.satisfied as i64)
}
