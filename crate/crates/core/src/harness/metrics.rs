use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::par::{self, ExecMode};
use crate::world::{Catalog, TaskCategory};

use super::{build_reasoners, run_episode_with, BackendKind, EpisodeTrace, HarnessError, SuiteConfig, Variant};

/// Efficiency improvement of `b` over `a`: `|a - b| / max(a, b)`, positive
/// when `b` needs fewer steps and negative when it needs more.
pub fn compute_ei(a: f64, b: f64) -> Result<f64, HarnessError> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(HarnessError::Contract(format!("EI needs positive step counts, got ({a}, {b})")));
    }
    Ok((a - b) / a.max(b))
}

/// EI as a whole-number percentage.
pub fn ei_percent(ei: f64) -> i64 {
    (ei * 100.0).round() as i64
}

/// One finished (or aborted) episode as counted by the metrics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub task: TaskCategory,
    pub num_agents: u32,
    pub variant: Variant,
    pub seed: u64,
    pub success: bool,
    /// Aborted episodes count as `max_steps`.
    pub steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl EpisodeOutcome {
    pub fn from_trace(trace: &EpisodeTrace) -> Result<Self, HarnessError> {
        let config = trace.config().ok_or_else(|| HarnessError::Trace("trace without header".into()))?;
        let (success, step_count) =
            trace.outcome().ok_or_else(|| HarnessError::Trace("trace without terminal record".into()))?;
        let error = trace.error().map(str::to_string);
        Ok(Self {
            task: config.task,
            num_agents: config.num_agents,
            variant: config.variant(),
            seed: config.seed,
            success,
            steps: if error.is_some() { config.max_steps } else { step_count },
            error,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub task: TaskCategory,
    pub num_agents: u32,
    pub variant: Variant,
    pub episodes: usize,
    pub successes: usize,
    pub errors: usize,
    pub success_rate: f64,
    /// Mean steps L; failed episodes count as their step cap.
    pub mean_steps: f64,
    /// Baseline row this row's EI is measured against, e.g. `1/full`.
    pub baseline: String,
    pub ei: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub baseline: (u32, Variant),
    pub rows: Vec<MetricsRow>,
}

impl MetricsTable {
    /// Aggregates outcomes per (task, agents, variant). Input order is irrelevant.
    pub fn from_outcomes<'a>(outcomes: impl IntoIterator<Item = &'a EpisodeOutcome>, baseline: (u32, Variant)) -> Self {
        let mut cells: BTreeMap<(TaskCategory, u32, Variant), Vec<&EpisodeOutcome>> = BTreeMap::new();
        for o in outcomes {
            cells.entry((o.task, o.num_agents, o.variant)).or_default().push(o);
        }
        let mean = |v: &[&EpisodeOutcome]| {
            // sum in seed order so the float result is independent of input order
            let mut steps: Vec<(u64, u64)> = v.iter().map(|o| (o.seed, o.steps)).collect();
            steps.sort_unstable();
            steps.iter().map(|s| s.1 as f64).sum::<f64>() / v.len() as f64
        };
        let means: BTreeMap<_, f64> = cells.iter().map(|(k, v)| (*k, mean(v))).collect();
        let label = format!("{}/{}", baseline.0, baseline.1);
        let rows = cells
            .iter()
            .map(|(&(task, n, variant), v)| {
                let successes = v.iter().filter(|o| o.success).count();
                let l = means[&(task, n, variant)];
                let ei = means
                    .get(&(task, baseline.0, baseline.1))
                    .and_then(|&base| compute_ei(base, l).ok());
                MetricsRow {
                    task,
                    num_agents: n,
                    variant,
                    episodes: v.len(),
                    successes,
                    errors: v.iter().filter(|o| o.error.is_some()).count(),
                    success_rate: successes as f64 / v.len() as f64,
                    mean_steps: l,
                    baseline: label.clone(),
                    ei,
                }
            })
            .collect();
        MetricsTable { baseline, rows }
    }

    pub fn from_traces<'a>(
        traces: impl IntoIterator<Item = &'a EpisodeTrace>,
        baseline: (u32, Variant),
    ) -> Result<Self, HarnessError> {
        let outcomes = traces.into_iter().map(EpisodeOutcome::from_trace).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_outcomes(&outcomes, baseline))
    }

    pub fn row(&self, task: TaskCategory, num_agents: u32, variant: Variant) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .find(|r| r.task == task && r.num_agents == num_agents && r.variant == variant)
    }
}

/// A completed suite: the table plus every trace, in grid order.
#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub table: MetricsTable,
    pub traces: Vec<EpisodeTrace>,
}

/// Runs every cell of `suite`; episodes are independent and run through
/// [`par::map`]. Aborted episodes keep their diagnostic trace and count as
/// failures; configuration errors stop the suite before any episode runs.
pub fn run_benchmark(suite: &SuiteConfig, mode: ExecMode) -> Result<BenchmarkRun, HarnessError> {
    run_benchmark_in(suite, Catalog::builtin(), mode)
}

pub fn run_benchmark_in(suite: &SuiteConfig, catalog: &Catalog, mode: ExecMode) -> Result<BenchmarkRun, HarnessError> {
    let b = suite.base.backends;
    if b.manager == BackendKind::Scripted || b.members == BackendKind::Scripted {
        return Err(HarnessError::Config("scripted backends replay single episodes; use `replay`".into()));
    }
    let episodes = suite.episodes();
    for e in &episodes {
        e.validate()?;
    }
    let reasoners = build_reasoners(&suite.base)?;
    let (manager, members) = (reasoners.manager.as_ref(), reasoners.members.as_ref());
    let results = par::map(mode, episodes, |config| run_episode_with(&config, catalog, manager, members));
    let mut traces = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(t) => traces.push(t),
            Err(HarnessError::Aborted { trace, .. }) => traces.push(*trace),
            Err(e) => return Err(e),
        }
    }
    let table = MetricsTable::from_traces(&traces, suite.baseline)?;
    Ok(BenchmarkRun { table, traces })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ei_examples() {
        assert_eq!(ei_percent(compute_ei(106.1, 34.4).unwrap()), 68);
        assert_eq!(ei_percent(compute_ei(106.1, 82.7).unwrap()), 22);
        assert_eq!(compute_ei(50.0, 50.0).unwrap(), 0.0);
        assert_eq!(ei_percent(compute_ei(34.4, 106.1).unwrap()), -68);
        assert!(compute_ei(0.0, 3.0).is_err());
        assert!(compute_ei(3.0, -1.0).is_err());
        assert!(compute_ei(f64::NAN, 1.0).is_err());
    }

    fn outcome(task: TaskCategory, n: u32, seed: u64, steps: u64) -> EpisodeOutcome {
        EpisodeOutcome { task, num_agents: n, variant: Variant::Full, seed, success: steps < 250, steps, error: None }
    }

    #[test]
    fn aggregation_is_order_insensitive() {
        let t = TaskCategory::PrepareTea;
        let mut v = vec![outcome(t, 1, 0, 40), outcome(t, 1, 1, 60), outcome(t, 3, 0, 20), outcome(t, 3, 1, 250)];
        let a = MetricsTable::from_outcomes(&v, (1, Variant::Full));
        v.reverse();
        let b = MetricsTable::from_outcomes(&v, (1, Variant::Full));
        assert_eq!(a, b);
        let one = a.row(t, 1, Variant::Full).unwrap();
        assert_eq!((one.mean_steps, one.ei), (50.0, Some(0.0)));
        let three = a.row(t, 3, Variant::Full).unwrap();
        assert_eq!((three.mean_steps, three.success_rate), (135.0, 0.5));
        assert_eq!(three.baseline, "1/full");
        assert!(three.ei.unwrap() < 0.0);
    }

    #[test]
    fn singleton_cell_is_its_episode() {
        let t = TaskCategory::WashDishes;
        let table = MetricsTable::from_outcomes(&[outcome(t, 2, 9, 77)], (1, Variant::Full));
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].mean_steps, 77.0);
        assert_eq!(table.rows[0].ei, None);
    }
}
