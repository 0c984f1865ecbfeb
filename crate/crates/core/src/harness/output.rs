use std::fs;
use std::path::{Path, PathBuf};

use super::{EpisodeOutcome, EpisodeTrace, HarnessError, MetricsTable, Variant};

fn io(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io(format!("{}: {e}", path.display()))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io(format!("{}: {e}", path.display()))
}

/// File name of an episode trace inside `traces/`.
pub fn trace_file_name(trace: &EpisodeTrace) -> Option<String> {
    let c = trace.config()?;
    Some(format!("{}_{}a_{}_s{}.jsonl", c.task, c.num_agents, c.variant(), c.seed))
}

/// Files written by [`emit_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFiles {
    pub metrics_csv: PathBuf,
    pub metrics_json: PathBuf,
    pub long_csv: PathBuf,
    pub traces: Vec<PathBuf>,
}

/// Writes `metrics.csv`, `metrics.json`, the long-format `long.csv`
/// (one row per episode) and `traces/<episode>.jsonl` under `out_dir`.
pub fn emit_outputs(table: &MetricsTable, traces: &[EpisodeTrace], out_dir: &Path) -> Result<OutputFiles, HarnessError> {
    let trace_dir = out_dir.join("traces");
    fs::create_dir_all(&trace_dir).map_err(io(&trace_dir))?;

    let metrics_csv = out_dir.join("metrics.csv");
    let mut w = csv::Writer::from_path(&metrics_csv).map_err(csv_err(&metrics_csv))?;
    w.write_record([
        "task", "agents", "variant", "episodes", "successes", "errors", "success_rate", "mean_steps", "baseline",
        "ei", "ei_percent",
    ])
    .map_err(csv_err(&metrics_csv))?;
    for r in &table.rows {
        w.write_record([
            r.task.to_string(),
            r.num_agents.to_string(),
            r.variant.to_string(),
            r.episodes.to_string(),
            r.successes.to_string(),
            r.errors.to_string(),
            format!("{:.3}", r.success_rate),
            format!("{:.2}", r.mean_steps),
            r.baseline.clone(),
            r.ei.map_or(String::new(), |e| format!("{e:.4}")),
            r.ei.map_or(String::new(), |e| super::ei_percent(e).to_string()),
        ])
        .map_err(csv_err(&metrics_csv))?;
    }
    w.flush().map_err(io(&metrics_csv))?;

    let metrics_json = out_dir.join("metrics.json");
    let json = serde_json::to_string_pretty(table).map_err(|e| HarnessError::Io(e.to_string()))?;
    fs::write(&metrics_json, json + "\n").map_err(io(&metrics_json))?;

    let long_csv = out_dir.join("long.csv");
    let mut w = csv::Writer::from_path(&long_csv).map_err(csv_err(&long_csv))?;
    w.write_record(["task", "agents", "variant", "seed", "steps", "success"])
        .map_err(csv_err(&long_csv))?;
    let mut paths = Vec::with_capacity(traces.len());
    for t in traces {
        let o = EpisodeOutcome::from_trace(t)?;
        w.write_record([
            o.task.to_string(),
            o.num_agents.to_string(),
            o.variant.to_string(),
            o.seed.to_string(),
            o.steps.to_string(),
            o.success.to_string(),
        ])
        .map_err(csv_err(&long_csv))?;
        let name = trace_file_name(t).ok_or_else(|| HarnessError::Trace("trace without header".into()))?;
        let path = trace_dir.join(name);
        t.save(&path)?;
        paths.push(path);
    }
    w.flush().map_err(io(&long_csv))?;
    Ok(OutputFiles { metrics_csv, metrics_json, long_csv, traces: paths })
}

/// Loads every `*.jsonl` trace in `dir` (or in `dir/traces` when present), sorted by file name.
pub fn load_traces(dir: &Path) -> Result<Vec<EpisodeTrace>, HarnessError> {
    let nested = dir.join("traces");
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(io(&dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    files.iter().map(|p| EpisodeTrace::load(p)).collect()
}

/// Rebuilds the metrics table from stored traces.
pub fn report(dir: &Path, baseline: (u32, Variant)) -> Result<MetricsTable, HarnessError> {
    MetricsTable::from_traces(&load_traces(dir)?, baseline)
}
