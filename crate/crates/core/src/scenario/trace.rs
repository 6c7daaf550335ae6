//! Per-tick text traces.
//!
//! ```text
//! # patrol-trace v1
//! # config=scenarios/baseline.toml seed=0 scenario=corridor-g2 kind=run supervised=0
//! tick=0 t=0 x=650 y=1268 heading=0 left=30 front=255 right=255 ... events=-
//! ```
//!
//! Every field is written with shortest round-trip formatting, so a headless
//! run can be replayed and compared byte for byte.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use super::{run, run_batch, CommandSource, ConfigError, Scenario, TickRecord, Unsupervised};
use crate::kv::{KvError, KvRecord, KvWriter};
use crate::pilot::{AgentMode, PatrolEvent};
use crate::world::{MotionCommand, Pose};

pub const MAGIC: &str = "# patrol-trace v1";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("not a patrol trace (missing `{MAGIC}`)")]
    BadMagic,
    #[error("line {line}: {source}")]
    Field { line: usize, source: KvError },
    #[error("line {line}: {message}")]
    Value { line: usize, message: String },
    #[error("trace has no config path; it cannot be replayed")]
    NoConfig,
    #[error("trace of a supervised run cannot be replayed")]
    Supervised,
    #[error("{0}")]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Run,
    /// Back-to-back loops, with an optional cap.
    Batch(Option<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHeader {
    pub config: Option<String>,
    pub seed: u64,
    pub scenario: String,
    pub kind: TraceKind,
    /// True when an operator or center could have influenced the run.
    pub supervised: bool,
}

impl TraceHeader {
    pub fn new(scenario: &Scenario, kind: TraceKind, supervised: bool) -> Self {
        Self {
            config: scenario.source.clone(),
            seed: scenario.seed,
            scenario: scenario.name.clone(),
            kind,
            supervised,
        }
    }

    pub fn render(&self) -> String {
        let mut w = KvWriter::new();
        if let Some(c) = &self.config {
            w.put("config", c);
        }
        w.put("seed", self.seed).put("scenario", &self.scenario);
        match self.kind {
            TraceKind::Run => {
                w.put("kind", "run");
            }
            TraceKind::Batch(max) => {
                w.put("kind", "batch");
                if let Some(m) = max {
                    w.put("max_loops", m);
                }
            }
        }
        w.put_bool("supervised", self.supervised);
        format!("{MAGIC}\n# {}\n", w.finish())
    }

    fn parse(line: &str) -> Result<Self, TraceError> {
        let body = line.strip_prefix("# ").ok_or(TraceError::Value {
            line: 2,
            message: "expected header record".into(),
        })?;
        let field = |source| TraceError::Field { line: 2, source };
        let rec = KvRecord::parse(body).map_err(field)?;
        let kind = match rec.str("kind").map_err(field)? {
            "run" => TraceKind::Run,
            "batch" => TraceKind::Batch(rec.get_opt("max_loops").map_err(field)?),
            other => {
                return Err(TraceError::Value {
                    line: 2,
                    message: format!("unknown trace kind `{other}`"),
                })
            }
        };
        Ok(Self {
            config: rec.raw("config").map(str::to_owned),
            seed: rec.get("seed").map_err(field)?,
            scenario: rec.str("scenario").map_err(field)?.to_owned(),
            kind,
            supervised: rec.flag("supervised").map_err(field)?,
        })
    }
}

fn event_token(e: &PatrolEvent) -> String {
    match e {
        PatrolEvent::ModeChanged { from, to } => format!("mode:{from}>{to}"),
        PatrolEvent::AlarmRaised { cause, .. } => format!("alarm:{cause}"),
        PatrolEvent::EndDetected { .. } => "end".into(),
        PatrolEvent::LoopCompleted { loops } => format!("loop:{loops}"),
    }
}

/// One trace line, without the newline.
pub fn format_row(r: &TickRecord) -> String {
    let mut w = KvWriter::new();
    let s = &r.frame.sonar;
    w.put("tick", r.tick)
        .put("t", r.t)
        .put("x", r.frame.pose.x)
        .put("y", r.frame.pose.y)
        .put("heading", r.frame.pose.heading)
        .put("left", s.left)
        .put("front", s.front)
        .put("right", s.right)
        .put_bool("hms_left", r.frame.hms.left)
        .put_bool("hms_right", r.frame.hms.right)
        .put("battery", r.frame.battery_remaining);
    match r.wall_distance {
        Some(d) => w.put("wall", d),
        None => w.put("wall", "none"),
    };
    let events = if r.events.is_empty() {
        "-".to_owned()
    } else {
        r.events.iter().map(event_token).collect::<Vec<_>>().join(",")
    };
    w.put("mode", r.mode)
        .put("cmd", r.command)
        .put("src", r.source.as_str())
        .put("elapsed", r.elapsed)
        .put_bool("collision", r.collision)
        .put("odometer", r.odometer)
        .put("events", events);
    w.finish()
}

/// Streams a trace to any writer.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, header: &TraceHeader) -> io::Result<Self> {
        out.write_all(header.render().as_bytes())?;
        Ok(Self { out })
    }

    pub fn row(&mut self, r: &TickRecord) -> io::Result<()> {
        writeln!(self.out, "{}", format_row(r))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn render(header: &TraceHeader, records: &[TickRecord]) -> String {
    let mut s = header.render();
    for r in records {
        writeln!(s, "{}", format_row(r)).expect("writing to a String");
    }
    s
}

/// A parsed trace line.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub tick: u64,
    pub t: f64,
    pub pose: Pose,
    pub left: f64,
    pub front: f64,
    pub right: f64,
    pub hms_left: bool,
    pub hms_right: bool,
    pub battery: f64,
    pub wall: Option<f64>,
    pub mode: AgentMode,
    pub command: MotionCommand,
    pub source: CommandSource,
    pub elapsed: f64,
    pub collision: bool,
    pub odometer: f64,
    pub events: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub rows: Vec<TraceRow>,
}

fn parse_row(line: &str, n: usize) -> Result<TraceRow, TraceError> {
    let field = |source| TraceError::Field { line: n, source };
    let value = |message: String| TraceError::Value { line: n, message };
    let rec = KvRecord::parse(line).map_err(field)?;
    let f = |k: &str| rec.finite(k).map_err(field);
    let wall = match rec.str("wall").map_err(field)? {
        "none" => None,
        _ => Some(f("wall")?),
    };
    let cmd = rec.str("cmd").map_err(field)?;
    let events = match rec.str("events").map_err(field)? {
        "-" => Vec::new(),
        list => list.split(',').map(str::to_owned).collect(),
    };
    Ok(TraceRow {
        tick: rec.get("tick").map_err(field)?,
        t: f("t")?,
        pose: Pose::new(f("x")?, f("y")?, f("heading")?),
        left: f("left")?,
        front: f("front")?,
        right: f("right")?,
        hms_left: rec.flag("hms_left").map_err(field)?,
        hms_right: rec.flag("hms_right").map_err(field)?,
        battery: f("battery")?,
        wall,
        mode: rec.str("mode").map_err(field)?.parse().map_err(value)?,
        command: MotionCommand::parse(cmd).ok_or_else(|| value(format!("bad command `{cmd}`")))?,
        source: rec.str("src").map_err(field)?.parse().map_err(value)?,
        elapsed: f("elapsed")?,
        collision: rec.flag("collision").map_err(field)?,
        odometer: f("odometer")?,
        events,
    })
}

pub fn parse(text: &str) -> Result<Trace, TraceError> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(TraceError::BadMagic);
    }
    let header = TraceHeader::parse(lines.next().unwrap_or_default())?;
    let rows = lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| parse_row(l, i + 3))
        .collect::<Result<_, _>>()?;
    Ok(Trace { header, rows })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub lines: usize,
    /// First differing line (1-based) with the recorded and replayed text.
    pub mismatch: Option<(usize, String, String)>,
}

impl ReplayReport {
    pub fn identical(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// Re-runs the headless scenario named in a trace and compares the output.
pub fn replay(text: &str) -> Result<ReplayReport, TraceError> {
    let trace = parse(text)?;
    let header = trace.header;
    if header.supervised {
        return Err(TraceError::Supervised);
    }
    let config = header.config.as_deref().ok_or(TraceError::NoConfig)?;
    let mut scenario = Scenario::load(config)?;
    scenario.seed = header.seed;
    let fresh = regenerate(&scenario, &header);
    Ok(compare(text, &fresh))
}

/// Renders the trace a headless run of `scenario` would produce.
pub fn regenerate(scenario: &Scenario, header: &TraceHeader) -> String {
    let records = match header.kind {
        TraceKind::Run => run(scenario, &mut Unsupervised).records,
        TraceKind::Batch(max) => {
            let mut all = Vec::new();
            run_batch(scenario, max, &mut Unsupervised, |_, recs| {
                all.extend_from_slice(recs)
            });
            all
        }
    };
    render(header, &records)
}

pub fn compare(recorded: &str, fresh: &str) -> ReplayReport {
    let a: Vec<&str> = recorded.lines().collect();
    let b: Vec<&str> = fresh.lines().collect();
    let mismatch = (0..a.len().max(b.len())).find_map(|i| {
        let x = a.get(i).copied().unwrap_or("<end of trace>");
        let y = b.get(i).copied().unwrap_or("<end of trace>");
        (x != y).then(|| (i + 1, x.to_owned(), y.to_owned()))
    });
    let mismatch = mismatch.or_else(|| {
        (recorded.ends_with('\n') != fresh.ends_with('\n'))
            .then(|| (a.len(), "trailing newline differs".into(), String::new()))
    });
    ReplayReport { lines: a.len(), mismatch }
}

pub fn load(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    parse(&std::fs::read_to_string(path)?)
}
