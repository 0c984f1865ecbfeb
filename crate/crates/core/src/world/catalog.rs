//! Scenario catalog (a TOML data file) and the seeded scenario generator.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::ids::{AgentId, FixtureId, ObjectId, RoomId};

use super::{GoalPredicate, GoalSpec, Layout, Location, Relation, TaskCategory, WorldError, WorldState};

const BUILTIN: &str = include_str!("../../data/catalog.toml");
pub const CATALOG_VERSION: u32 = 1;
pub const MAX_AGENTS: u32 = 3;

#[derive(Debug, Clone, Deserialize)]
struct FixtureEntry {
    id: FixtureId,
    room: RoomId,
}

#[derive(Debug, Clone, Deserialize)]
struct GoalEntry {
    relation: Relation,
    class: String,
    target: FixtureId,
    count: u32,
}

#[derive(Debug, Clone, Deserialize)]
struct TaskEntry {
    containers: Vec<FixtureId>,
    surfaces: Vec<FixtureId>,
    objects: [u32; 2],
    extra_copies: u32,
    goal: Vec<GoalEntry>,
}

#[derive(Debug, Clone, Deserialize)]
struct CatalogFile {
    version: u32,
    rooms: Vec<RoomId>,
    doors: Vec<[RoomId; 2]>,
    containers: Vec<FixtureEntry>,
    surfaces: Vec<FixtureEntry>,
    distractors: Vec<String>,
    tasks: BTreeMap<String, TaskEntry>,
}

#[derive(Debug, Clone)]
struct Recipe {
    layout: Arc<Layout>,
    goal: GoalSpec,
    objects: (u32, u32),
    extra_copies: u32,
}

/// Validated scenario definitions, one recipe per task category.
#[derive(Debug, Clone)]
pub struct Catalog {
    pub version: u32,
    distractors: Vec<String>,
    recipes: BTreeMap<TaskCategory, Recipe>,
}

impl Catalog {
    pub fn builtin() -> &'static Catalog {
        static CATALOG: OnceLock<Catalog> = OnceLock::new();
        CATALOG.get_or_init(|| Catalog::parse(BUILTIN).expect("embedded catalog is valid"))
    }

    pub fn load(path: &Path) -> Result<Catalog, WorldError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WorldError::Config(format!("reading {}: {e}", path.display())))?;
        Catalog::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Catalog, WorldError> {
        let file: CatalogFile =
            toml::from_str(text).map_err(|e| WorldError::Config(format!("catalog: {e}")))?;
        if file.version != CATALOG_VERSION {
            return Err(WorldError::Config(format!(
                "catalog version {} unsupported (expected {CATALOG_VERSION})",
                file.version
            )));
        }
        if file.distractors.is_empty() {
            return Err(WorldError::Config("catalog lists no distractor classes".into()));
        }
        let all_containers: BTreeMap<_, _> =
            file.containers.iter().map(|f| (f.id.clone(), f.room.clone())).collect();
        let all_surfaces: BTreeMap<_, _> =
            file.surfaces.iter().map(|f| (f.id.clone(), f.room.clone())).collect();

        let mut recipes = BTreeMap::new();
        for (name, entry) in &file.tasks {
            let task: TaskCategory = name.parse()?;
            let pick = |ids: &[FixtureId], all: &BTreeMap<FixtureId, RoomId>| {
                ids.iter()
                    .map(|id| {
                        all.get(id)
                            .map(|r| (id.clone(), r.clone()))
                            .ok_or_else(|| WorldError::Config(format!("{name}: unknown fixture {id}")))
                    })
                    .collect::<Result<Vec<_>, _>>()
            };
            let layout = Layout::new(
                file.rooms.iter().cloned(),
                file.doors.iter().map(|[a, b]| (a.clone(), b.clone())),
                pick(&entry.containers, &all_containers)?,
                pick(&entry.surfaces, &all_surfaces)?,
            )?;
            let predicates: Vec<GoalPredicate> = entry
                .goal
                .iter()
                .map(|g| GoalPredicate {
                    relation: g.relation,
                    class: g.class.clone(),
                    target: g.target.clone(),
                    required: g.count,
                })
                .collect();
            if predicates.is_empty() {
                return Err(WorldError::Config(format!("{name}: empty goal")));
            }
            for p in &predicates {
                let ok = match p.relation {
                    Relation::On => layout.is_surface(&p.target),
                    Relation::In => layout.is_container(&p.target),
                };
                if !ok || p.required == 0 {
                    return Err(WorldError::Config(format!("{name}: bad predicate {p}")));
                }
            }
            let demanded: u32 = predicates.iter().map(|p| p.required + entry.extra_copies).sum();
            let [lo, hi] = entry.objects;
            if lo > hi || hi < demanded {
                return Err(WorldError::Config(format!("{name}: object range {lo}..={hi} too small")));
            }
            recipes.insert(
                task,
                Recipe {
                    layout: Arc::new(layout),
                    goal: GoalSpec { task, predicates },
                    objects: (lo.max(demanded), hi),
                    extra_copies: entry.extra_copies,
                },
            );
        }
        Ok(Catalog { version: file.version, distractors: file.distractors, recipes })
    }

    /// Deterministic scenario for (task, agent count, seed).
    ///
    /// Demanded objects never start at their own goal target, so the goal
    /// starts unsatisfied. Every container starts closed and all agents start
    /// in one seeded room.
    pub fn init_world(
        &self,
        task: TaskCategory,
        num_agents: u32,
        seed: u64,
    ) -> Result<(WorldState, GoalSpec), WorldError> {
        if !(1..=MAX_AGENTS).contains(&num_agents) {
            return Err(WorldError::Config(format!(
                "num_agents must be in 1..={MAX_AGENTS}, got {num_agents}"
            )));
        }
        let recipe = self
            .recipes
            .get(&task)
            .ok_or_else(|| WorldError::Config(format!("catalog has no recipe for {task}")))?;
        let layout = recipe.layout.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((task as u64) << 56));

        let mut spots: Vec<Location> = layout.rooms().iter().cloned().map(Location::Floor).collect();
        spots.extend(layout.surfaces().keys().cloned().map(Location::On));
        spots.extend(layout.containers().keys().cloned().map(Location::In));

        let mut classes: Vec<String> = Vec::new();
        for p in &recipe.goal.predicates {
            let extra = rng.random_range(0..=recipe.extra_copies);
            classes.extend(std::iter::repeat_n(p.class.clone(), (p.required + extra) as usize));
        }
        let n_objects = rng.random_range(recipe.objects.0..=recipe.objects.1) as usize;
        while classes.len() < n_objects {
            classes.push(self.distractors.choose(&mut rng).unwrap().clone());
        }

        let start = layout.rooms().choose(&mut rng).unwrap().clone();
        let mut state = WorldState::new(layout);
        for a in 1..=num_agents {
            state = state.with_agent(AgentId(a), start.clone());
        }

        let mut per_class: BTreeMap<String, u32> = BTreeMap::new();
        for class in classes {
            let forbidden: Vec<Location> = recipe
                .goal
                .predicates
                .iter()
                .filter(|p| p.class == class)
                .map(|p| p.relation.location(&p.target))
                .collect();
            let allowed: Vec<&Location> = spots.iter().filter(|s| !forbidden.contains(s)).collect();
            let loc = (*allowed.choose(&mut rng).unwrap()).clone();
            let n = per_class.entry(class.clone()).or_insert(0);
            *n += 1;
            state = state.with_object(ObjectId(format!("{class}_{n}")), class, loc);
        }
        debug_assert!(state.check_invariants().is_ok());
        Ok((state, recipe.goal.clone()))
    }
}

/// [`Catalog::init_world`] against the embedded catalog.
pub fn init_world(
    task: TaskCategory,
    num_agents: u32,
    seed: u64,
) -> Result<(WorldState, GoalSpec), WorldError> {
    Catalog::builtin().init_world(task, num_agents, seed)
}
