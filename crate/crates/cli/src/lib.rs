//! Runs patrol scenarios headless or against a live control center and
//! writes their artifacts: a per-tick trace, a JSON summary, and the log of
//! operator commands when a center is attached.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use patrol_core::fuzzy::{FuzzyConfig, FuzzyController, FuzzyError};
use patrol_core::kv::KvWriter;
use patrol_core::link::{AgentLink, CommandLogEntry, LinkConfig, LinkError};
use patrol_core::protocol::Hello;
use patrol_core::scenario::trace::{self, ReplayReport, TraceError, TraceHeader, TraceKind};
use patrol_core::scenario::{
    control_surface, run, run_batch, surface_csv, BatchResult, ConfigError, RunOutcome,
    RunSummary, Scenario, Supervisor, TickRecord, Unsupervised,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNREACHABLE: i32 = 3;
pub const EXIT_REPLAY_MISMATCH: i32 = 4;
pub const EXIT_ALARM: i32 = 10;
pub const EXIT_COLLISION: i32 = 11;
pub const EXIT_TIMEOUT: i32 = 12;
pub const EXIT_BATTERY_OUT: i32 = 13;

pub fn outcome_code(outcome: RunOutcome) -> i32 {
    match outcome {
        RunOutcome::LoopComplete => EXIT_OK,
        RunOutcome::Alarm => EXIT_ALARM,
        RunOutcome::Collision => EXIT_COLLISION,
        RunOutcome::Timeout => EXIT_TIMEOUT,
        RunOutcome::BatteryOut => EXIT_BATTERY_OUT,
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Fuzzy(#[from] FuzzyError),
    #[error("{0}")]
    Center(#[from] LinkError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Trace(#[from] TraceError),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Fuzzy(_) | CliError::Invalid(_) => EXIT_CONFIG,
            CliError::Trace(TraceError::Config(_)) => EXIT_CONFIG,
            CliError::Center(_) => EXIT_UNREACHABLE,
            CliError::Io { .. } | CliError::Trace(_) => EXIT_OTHER,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Flags shared by `run` and `batch`.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Overrides the scenario's center endpoint.
    pub center: Option<String>,
    /// Ignore any center named in the scenario.
    pub headless: bool,
    /// Sim seconds per wall second when attached; `Some(0.0)` runs unpaced.
    pub pace: Option<f64>,
}

/// Loads the scenario and applies command-line overrides. The config path
/// is made absolute so that traces can be replayed from anywhere.
pub fn load_scenario(opts: &RunOptions) -> Result<Scenario, CliError> {
    let path = fs::canonicalize(&opts.config).unwrap_or_else(|_| opts.config.clone());
    let mut scenario = Scenario::load(&path)?;
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    if opts.headless {
        scenario.center = None;
    }
    if let Some(c) = &opts.center {
        scenario.center = Some(c.clone());
    }
    Ok(scenario)
}

pub fn output_dir(opts: &RunOptions, scenario: &Scenario) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&scenario.name))
}

fn connect(scenario: &Scenario, opts: &RunOptions) -> Result<Option<AgentLink>, CliError> {
    let Some(addr) = &scenario.center else {
        return Ok(None);
    };
    let pace = opts.pace.unwrap_or(1.0);
    let cfg = LinkConfig {
        telemetry_hz: scenario.telemetry_hz,
        video_fps: scenario.video_fps,
        buffer: scenario.link_buffer,
        pace: (pace > 0.0).then_some(pace),
        ..LinkConfig::default()
    };
    let hello = Hello {
        agent_id: format!("patrol-{}", scenario.seed),
        scenario: scenario.name.clone(),
        map: scenario.map.name().to_owned(),
    };
    Ok(Some(AgentLink::connect(addr, hello, cfg)?))
}

/// What a finished link left behind.
#[derive(Debug, Clone, Default)]
pub struct LinkSummary {
    pub dropped: u64,
    pub confirmed: bool,
    pub commands: Vec<CommandLogEntry>,
}

pub fn commands_log(entries: &[CommandLogEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        let mut w = KvWriter::new();
        w.put("t", e.t)
            .put("id", e.command.id)
            .put("kind", e.command.kind)
            .put("operator", &e.command.operator_id)
            .put("issued_at", e.command.issued_at)
            .put_bool("accepted", e.accepted);
        if !e.reason.is_empty() {
            w.put("reason", &e.reason);
        }
        s.push_str(&w.finish());
        s.push('\n');
    }
    s
}

fn finish_link(link: Option<AgentLink>, reason: &str) -> Option<LinkSummary> {
    link.map(|l| {
        let r = l.finish(reason);
        LinkSummary { dropped: r.dropped, confirmed: r.confirmed, commands: r.commands }
    })
}

fn write_link_artifacts(dir: &Path, link: &Option<LinkSummary>) -> Result<(), CliError> {
    if let Some(l) = link {
        write(&dir.join("commands.log"), commands_log(&l.commands))?;
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: RunSummary,
    pub out_dir: PathBuf,
    pub trace_path: PathBuf,
    pub link: Option<LinkSummary>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        outcome_code(self.summary.outcome)
    }
}

/// One mission. Writes `trace.txt`, `summary.json` and, when attached,
/// `commands.log` into the output directory.
pub fn run_command(opts: &RunOptions) -> Result<RunReport, CliError> {
    let scenario = load_scenario(opts)?;
    let out_dir = output_dir(opts, &scenario);
    create_dir(&out_dir)?;
    let mut link = connect(&scenario, opts)?;
    let supervised = link.is_some();
    let result = match link.as_mut() {
        Some(l) => run(&scenario, l),
        None => run(&scenario, &mut Unsupervised),
    };
    let mut summary = result.summary;
    let link = finish_link(link, summary.outcome.as_str());
    if let Some(l) = &link {
        summary.telemetry_dropped = l.dropped;
    }
    let header = TraceHeader::new(&scenario, TraceKind::Run, supervised);
    let trace_path = out_dir.join("trace.txt");
    write(&trace_path, trace::render(&header, &result.records))?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(&out_dir.join("summary.json"), json + "\n")?;
    write_link_artifacts(&out_dir, &link)?;
    Ok(RunReport { summary, out_dir, trace_path, link })
}

#[derive(Debug, Clone)]
pub struct BatchReport {
    pub result: BatchResult,
    pub max_loops: Option<u32>,
    pub out_dir: PathBuf,
    pub trace_path: PathBuf,
    pub link: Option<LinkSummary>,
}

impl BatchReport {
    /// Success when the requested number of loops was reached, otherwise the
    /// class of the mission that ended the batch.
    pub fn exit_code(&self) -> i32 {
        match self.max_loops {
            Some(n) if self.result.completed >= n => EXIT_OK,
            _ => outcome_code(self.result.outcome),
        }
    }
}

/// Back-to-back loops on one battery. Writes `trace.txt` for all loops and
/// `batch.json` with the per-loop summaries.
pub fn batch_command(opts: &RunOptions, max_loops: Option<u32>) -> Result<BatchReport, CliError> {
    if max_loops == Some(0) {
        return Err(CliError::Invalid("--loops must be at least 1".into()));
    }
    let scenario = load_scenario(opts)?;
    let out_dir = output_dir(opts, &scenario);
    create_dir(&out_dir)?;
    let mut link = connect(&scenario, opts)?;
    let supervised = link.is_some();
    let mut records: Vec<TickRecord> = Vec::new();
    let collect = |_: &RunSummary, recs: &[TickRecord]| records.extend_from_slice(recs);
    let mut result = match link.as_mut() {
        Some(l) => run_batch(&scenario, max_loops, l as &mut dyn Supervisor, collect),
        None => run_batch(&scenario, max_loops, &mut Unsupervised, collect),
    };
    let link = finish_link(link, result.outcome.as_str());
    if let (Some(l), Some(last)) = (&link, result.loops.last_mut()) {
        last.telemetry_dropped = l.dropped;
    }
    let header = TraceHeader::new(&scenario, TraceKind::Batch(max_loops), supervised);
    let trace_path = out_dir.join("trace.txt");
    write(&trace_path, trace::render(&header, &records))?;
    let json = serde_json::to_string_pretty(&result).expect("batch result serializes");
    write(&out_dir.join("batch.json"), json + "\n")?;
    write_link_artifacts(&out_dir, &link)?;
    Ok(BatchReport { result, max_loops, out_dir, trace_path, link })
}

/// Where the controller for `surface` comes from.
#[derive(Debug, Clone)]
pub enum SurfaceSource {
    Canonical,
    FuzzyFile(PathBuf),
    Scenario(PathBuf),
}

/// Control surface CSV over the input square at `step` cm.
pub fn surface_command(source: &SurfaceSource, step: f64) -> Result<String, CliError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(CliError::Invalid(format!("--step must be positive, got {step}")));
    }
    let controller = match source {
        SurfaceSource::Canonical => FuzzyController::canonical(),
        SurfaceSource::FuzzyFile(p) => FuzzyController::new(FuzzyConfig::load(p)?)?,
        SurfaceSource::Scenario(p) => Scenario::load(p)?.fuzzy,
    };
    Ok(surface_csv(&control_surface(&controller, step)))
}

pub fn replay_command(trace_path: &Path) -> Result<ReplayReport, CliError> {
    let text = fs::read_to_string(trace_path).map_err(io_err(trace_path))?;
    Ok(trace::replay(&text)?)
}
