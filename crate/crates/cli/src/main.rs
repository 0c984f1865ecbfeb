use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use housemind::harness::{
    emit_outputs, ei_percent, replay, report, run_benchmark, run_episode, trace_file_name, Backends,
    EpisodeConfig, EpisodeTrace, HarnessError, MetricsTable, SuiteConfig, Variant,
};
use housemind::par::ExecMode;
use housemind::reasoner::RemoteConfig;
use housemind::world::TaskCategory;

#[derive(Parser)]
#[command(name = "housemind", version, about = "Manager/member household robot coordination runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its trace.
    Run(RunArgs),
    /// Run a task × agents × variant × seed grid and write metrics plus traces.
    Bench(BenchArgs),
    /// Re-execute a recorded trace from its own transcripts.
    Replay(ReplayArgs),
    /// Rebuild the metrics table from stored traces.
    Report(ReportArgs),
}

/// Options shared by `run` and `bench`; flags override the config file.
#[derive(Args)]
struct Common {
    /// TOML config file (episode config for `run`, suite config for `bench`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// e.g. `manager=remote,members=heuristic`, or one name for both roles.
    #[arg(long)]
    backend: Option<Backends>,
    #[arg(long)]
    no_allocation: bool,
    #[arg(long)]
    no_summary: bool,
    #[arg(long)]
    max_steps: Option<u64>,
    /// Chat-completions URL for the remote backend; the API key is read from HOUSEMIND_API_KEY.
    #[arg(long)]
    endpoint_url: Option<String>,
    #[arg(long)]
    model: Option<String>,
}

impl Common {
    fn apply(&self, c: &mut EpisodeConfig) {
        if let Some(b) = self.backend {
            c.backends = b;
        }
        if self.no_allocation {
            c.allocation_enabled = false;
        }
        if self.no_summary {
            c.summary_enabled = false;
        }
        if let Some(m) = self.max_steps {
            c.max_steps = m;
        }
        if self.endpoint_url.is_some() || self.model.is_some() {
            let r = c.remote.get_or_insert_with(RemoteConfig::default);
            if let Some(u) = &self.endpoint_url {
                r.endpoint_url = u.clone();
            }
            if let Some(m) = &self.model {
                r.model = m.clone();
            }
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    task: Option<TaskCategory>,
    #[arg(long)]
    agents: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSONL fixtures for the scripted backend.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Trace output file, or a directory to place it in.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated task categories; default all.
    #[arg(long, value_delimiter = ',')]
    tasks: Vec<TaskCategory>,
    /// Comma-separated agent counts; default 1,2,3.
    #[arg(long, value_delimiter = ',')]
    agents: Vec<u32>,
    /// `N` (seeds 0..N), `A..B`, or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    /// Comma-separated variants: full, no_allocation, no_summary.
    #[arg(long, value_delimiter = ',')]
    variants: Vec<Variant>,
    /// Baseline cell for EI as `<agents>/<variant>`.
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run episodes one after another instead of in parallel.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct ReplayArgs {
    trace: PathBuf,
    /// Where to write the replayed trace.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding `*.jsonl` traces (or a `traces/` subdirectory).
    dir: PathBuf,
    #[arg(long)]
    baseline: Option<String>,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a >= b {
            bail!("empty seed range {s}");
        }
        return Ok((a..b).collect());
    }
    if s.contains(',') {
        return s.split(',').map(|x| Ok(x.trim().parse()?)).collect();
    }
    let n: u64 = s.trim().parse()?;
    if n == 0 {
        bail!("need at least one seed");
    }
    Ok((0..n).collect())
}

fn parse_baseline(s: &str) -> Result<(u32, Variant)> {
    let (n, v) = s.split_once('/').context("baseline must look like 1/full")?;
    Ok((n.trim().parse()?, v.parse()?))
}

fn print_table(t: &MetricsTable) {
    println!(
        "{:<14} {:>6} {:<26} {:>8} {:>8} {:>10} {:>8}",
        "task", "agents", "variant", "episodes", "success", "mean_L", "EI"
    );
    for r in &t.rows {
        let ei = r.ei.map_or("-".to_string(), |e| format!("{:+}%", ei_percent(e)));
        println!(
            "{:<14} {:>6} {:<26} {:>8} {:>7.0}% {:>10.2} {:>8}",
            r.task.to_string(),
            r.num_agents,
            r.variant.to_string(),
            r.episodes,
            r.success_rate * 100.0,
            r.mean_steps,
            ei
        );
    }
    println!("EI baseline: {}/{}", t.baseline.0, t.baseline.1);
}

fn write_trace(trace: &EpisodeTrace, out: &Path) -> Result<PathBuf> {
    let path = if out.extension().is_some_and(|e| e == "jsonl") {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        out.to_path_buf()
    } else {
        std::fs::create_dir_all(out)?;
        out.join(trace_file_name(trace).context("trace without header")?)
    };
    trace.save(&path)?;
    Ok(path)
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut c = match &a.common.config {
        Some(p) => EpisodeConfig::load(p)?,
        None => EpisodeConfig::new(TaskCategory::SetUpTable, 1, 0),
    };
    if let Some(t) = a.task {
        c.task = t;
    }
    if let Some(n) = a.agents {
        c.num_agents = n;
    }
    if let Some(s) = a.seed {
        c.seed = s;
    }
    if a.fixtures.is_some() {
        c.fixtures = a.fixtures.clone();
    }
    a.common.apply(&mut c);
    let trace = match run_episode(&c) {
        Ok(t) => t,
        Err(HarnessError::Aborted { message, trace }) => {
            let path = write_trace(&trace, &a.out)?;
            bail!("episode aborted: {message} (diagnostic trace at {})", path.display());
        }
        Err(e) => return Err(e.into()),
    };
    let path = write_trace(&trace, &a.out)?;
    let (success, steps) = trace.outcome().context("trace without terminal record")?;
    println!(
        "{} agents={} seed={} variant={}: {} after {steps} steps",
        c.task,
        c.num_agents,
        c.seed,
        c.variant(),
        if success { "success" } else { "failure" }
    );
    println!("trace: {}", path.display());
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let mut suite = match &a.common.config {
        Some(p) => SuiteConfig::from_toml(&std::fs::read_to_string(p)?)?,
        None => SuiteConfig::standard(),
    };
    if !a.tasks.is_empty() {
        suite.tasks = a.tasks.clone();
    }
    if !a.agents.is_empty() {
        suite.agent_counts = a.agents.clone();
    }
    if !a.variants.is_empty() {
        suite.variants = a.variants.clone();
    }
    if let Some(s) = &a.seeds {
        suite.seeds = parse_seeds(s)?;
    }
    if let Some(b) = &a.baseline {
        suite.baseline = parse_baseline(b)?;
    }
    a.common.apply(&mut suite.base);
    let mode = if a.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    let run = run_benchmark(&suite, mode)?;
    let files = emit_outputs(&run.table, &run.traces, &a.out)?;
    print_table(&run.table);
    println!(
        "wrote {}, {}, {} and {} traces",
        files.metrics_csv.display(),
        files.metrics_json.display(),
        files.long_csv.display(),
        files.traces.len()
    );
    Ok(())
}

fn cmd_replay(a: ReplayArgs) -> Result<bool> {
    let original = EpisodeTrace::load(&a.trace)?;
    let replayed = match replay(&original) {
        Ok(t) => t,
        Err(HarnessError::Aborted { trace, .. }) => *trace,
        Err(e) => return Err(e.into()),
    };
    if let Some(out) = &a.out {
        let path = write_trace(&replayed, out)?;
        println!("replayed trace: {}", path.display());
    }
    let same = original.behavior() == replayed.behavior();
    let (o, r) = (original.outcome(), replayed.outcome());
    println!("original {o:?}, replayed {r:?}: {}", if same { "identical" } else { "DIVERGED" });
    Ok(same)
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let baseline = match &a.baseline {
        Some(b) => parse_baseline(b)?,
        None => (1, Variant::Full),
    };
    print_table(&report(&a.dir, baseline)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Replay(a) => cmd_replay(a).and_then(|same| if same { Ok(()) } else { bail!("replay diverged") }),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
