//! Episode driver, benchmark runner, metrics and trace persistence.

mod config;
mod episode;
mod metrics;
mod output;
mod replay;
mod trace;

pub use config::{
    BackendKind, Backends, EpisodeConfig, SuiteConfig, Variant, DEFAULT_GAMMA, DEFAULT_K, DEFAULT_MAX_STEPS,
    DEFAULT_SEEDS,
};
pub use episode::{build_reasoners, run_episode, run_episode_with, Reasoners};
pub use metrics::{
    compute_ei, ei_percent, run_benchmark, run_benchmark_in, BenchmarkRun, EpisodeOutcome, MetricsRow,
    MetricsTable,
};
pub use output::{emit_outputs, load_traces, report, trace_file_name, OutputFiles};
pub use replay::{replay, replay_in};
pub use trace::{EpisodeTrace, ExecutionMode, TraceRecord, TRACE_FORMAT_VERSION};

use crate::world::WorldError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("episode aborted: {message}")]
    Aborted { message: String, trace: Box<EpisodeTrace> },
}
