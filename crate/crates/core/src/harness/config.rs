use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::reasoner::{Budget, RemoteConfig, Templates};
use crate::world::{TaskCategory, MAX_AGENTS};

use super::HarnessError;

pub const DEFAULT_MAX_STEPS: u64 = 250;
pub const DEFAULT_GAMMA: f64 = 0.95;
pub const DEFAULT_K: usize = 3;
pub const DEFAULT_SEEDS: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Heuristic,
    Scripted,
    Remote,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Heuristic => "heuristic",
            BackendKind::Scripted => "scripted",
            BackendKind::Remote => "remote",
        })
    }
}

impl FromStr for BackendKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heuristic" => Ok(BackendKind::Heuristic),
            "scripted" => Ok(BackendKind::Scripted),
            "remote" => Ok(BackendKind::Remote),
            _ => Err(HarnessError::Config(format!("unknown backend '{s}'"))),
        }
    }
}

/// Reasoner backend per role. The manager answers allocation and summary
/// requests and its own proposals; members answer the other proposals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Backends {
    pub manager: BackendKind,
    pub members: BackendKind,
}

impl Default for Backends {
    fn default() -> Self {
        Self { manager: BackendKind::Heuristic, members: BackendKind::Heuristic }
    }
}

impl FromStr for Backends {
    type Err = HarnessError;

    /// `manager=<name>,members=<name>`, either part optional, or a bare name for both.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Backends::default();
        if !s.contains('=') {
            let k: BackendKind = s.parse()?;
            return Ok(Backends { manager: k, members: k });
        }
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (role, name) = part
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("expected role=name, got '{part}'")))?;
            match role.trim() {
                "manager" => out.manager = name.parse()?,
                "members" | "member" => out.members = name.parse()?,
                other => return Err(HarnessError::Config(format!("unknown role '{other}'"))),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Backends {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "manager={},members={}", self.manager, self.members)
    }
}

/// Method variant of a benchmark cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    NoAllocation,
    NoSummary,
    NoAllocationNoSummary,
}

impl Variant {
    /// The variants of the standard ablation study.
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::NoAllocation, Variant::NoSummary];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoAllocation => "no_allocation",
            Variant::NoSummary => "no_summary",
            Variant::NoAllocationNoSummary => "no_allocation_no_summary",
        }
    }

    pub fn from_flags(allocation_enabled: bool, summary_enabled: bool) -> Variant {
        match (allocation_enabled, summary_enabled) {
            (true, true) => Variant::Full,
            (false, true) => Variant::NoAllocation,
            (true, false) => Variant::NoSummary,
            (false, false) => Variant::NoAllocationNoSummary,
        }
    }

    fn flags(self) -> (bool, bool) {
        match self {
            Variant::Full => (true, true),
            Variant::NoAllocation => (false, true),
            Variant::NoSummary => (true, false),
            Variant::NoAllocationNoSummary => (false, false),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "full" => Ok(Variant::Full),
            "no_allocation" => Ok(Variant::NoAllocation),
            "no_summary" => Ok(Variant::NoSummary),
            "no_allocation_no_summary" => Ok(Variant::NoAllocationNoSummary),
            _ => Err(HarnessError::Config(format!("unknown variant '{s}'"))),
        }
    }
}

fn default_true() -> bool {
    true
}
fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}
fn default_k() -> usize {
    DEFAULT_K
}

/// One episode's full configuration; also the TOML config-file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    pub task: TaskCategory,
    pub num_agents: u32,
    pub seed: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default)]
    pub backends: Backends,
    #[serde(default = "default_true")]
    pub allocation_enabled: bool,
    #[serde(default = "default_true")]
    pub summary_enabled: bool,
    /// Recorded for reference; planning does not discount.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Alternatives per proposal.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub templates: Templates,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote: Option<RemoteConfig>,
    /// JSONL fixtures for the scripted backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<PathBuf>,
}

impl EpisodeConfig {
    pub fn new(task: TaskCategory, num_agents: u32, seed: u64) -> Self {
        Self {
            task,
            num_agents,
            seed,
            max_steps: DEFAULT_MAX_STEPS,
            backends: Backends::default(),
            allocation_enabled: true,
            summary_enabled: true,
            gamma: DEFAULT_GAMMA,
            k: DEFAULT_K,
            templates: Templates::default(),
            budget: Budget::default(),
            remote: None,
            fixtures: None,
        }
    }

    pub fn with_variant(mut self, v: Variant) -> Self {
        (self.allocation_enabled, self.summary_enabled) = v.flags();
        self
    }

    pub fn variant(&self) -> Variant {
        Variant::from_flags(self.allocation_enabled, self.summary_enabled)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.max_steps == 0 {
            return Err(HarnessError::Config("max_steps must be positive".into()));
        }
        if !(1..=MAX_AGENTS).contains(&self.num_agents) {
            return Err(HarnessError::Config(format!(
                "num_agents must be in 1..={MAX_AGENTS}, got {}",
                self.num_agents
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(HarnessError::Config(format!("gamma must be in (0, 1], got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// A benchmark grid: every task × agent count × variant × seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub tasks: Vec<TaskCategory>,
    pub agent_counts: Vec<u32>,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    /// Reference cell for EI: (agent count, variant).
    #[serde(default = "default_baseline")]
    pub baseline: (u32, Variant),
    /// Template for every episode; task, agents, seed and flags are overwritten.
    pub base: EpisodeConfig,
}

fn default_baseline() -> (u32, Variant) {
    (1, Variant::Full)
}

impl SuiteConfig {
    /// All configured tasks, agent counts 1..=3 and variants, seeds `0..DEFAULT_SEEDS`.
    pub fn standard() -> Self {
        Self {
            tasks: TaskCategory::ALL.to_vec(),
            agent_counts: vec![1, 2, 3],
            variants: Variant::ALL.to_vec(),
            seeds: (0..DEFAULT_SEEDS).collect(),
            baseline: default_baseline(),
            base: EpisodeConfig::new(TaskCategory::SetUpTable, 1, 0),
        }
    }

    /// Episode configs in grid order.
    pub fn episodes(&self) -> Vec<EpisodeConfig> {
        let mut out = Vec::new();
        for &task in &self.tasks {
            for &n in &self.agent_counts {
                for &v in &self.variants {
                    for &seed in &self.seeds {
                        let mut c = self.base.clone().with_variant(v);
                        c.task = task;
                        c.num_agents = n;
                        c.seed = seed;
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(format!("suite config: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_spec_parsing() {
        let b: Backends = "manager=remote,members=heuristic".parse().unwrap();
        assert_eq!((b.manager, b.members), (BackendKind::Remote, BackendKind::Heuristic));
        let b: Backends = "scripted".parse().unwrap();
        assert_eq!((b.manager, b.members), (BackendKind::Scripted, BackendKind::Scripted));
        assert_eq!(b.to_string().parse::<Backends>().unwrap(), b);
        assert!("boss=remote".parse::<Backends>().is_err());
        assert!("manager=oracle".parse::<Backends>().is_err());
    }

    #[test]
    fn toml_defaults_and_validation() {
        let c = EpisodeConfig::from_toml("task = \"SetUpTable\"\nnum_agents = 2\nseed = 7\n").unwrap();
        assert_eq!(c, EpisodeConfig::new(TaskCategory::SetUpTable, 2, 7));
        c.validate().unwrap();
        assert!(EpisodeConfig { max_steps: 0, ..c.clone() }.validate().is_err());
        assert!(EpisodeConfig { num_agents: 0, ..c.clone() }.validate().is_err());
        assert!(EpisodeConfig { num_agents: 4, ..c.clone() }.validate().is_err());
        assert!(EpisodeConfig::from_toml("task = \"SetUpTable\"\nnum_agents = 2\nseed = 7\nbogus = 1\n").is_err());
        let round = EpisodeConfig::from_toml(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn suite_grid_order() {
        let s = SuiteConfig {
            tasks: vec![TaskCategory::PrepareTea],
            agent_counts: vec![1, 3],
            variants: vec![Variant::Full, Variant::NoSummary],
            seeds: vec![5, 6],
            ..SuiteConfig::standard()
        };
        let e = s.episodes();
        assert_eq!(e.len(), 8);
        assert_eq!((e[0].num_agents, e[0].seed, e[0].summary_enabled), (1, 5, true));
        assert_eq!((e[3].num_agents, e[3].seed, e[3].summary_enabled), (1, 6, false));
        assert_eq!(e[7].num_agents, 3);
    }
}
