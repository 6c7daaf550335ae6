//! Agent side of a live session.
//!
//! [`AgentLink`] plugs into the mission runner as a [`Supervisor`]: it ships
//! telemetry, video stubs and alarms to a control center on a background
//! thread and turns operator commands into [`Directive`]s. The simulation
//! never waits on the network; when the outgoing queue is full the oldest
//! telemetry or video message is dropped and counted. Alarms, hellos and
//! command acknowledgments are never dropped.

use std::collections::VecDeque;
use std::io::{self, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::geometry::normalize_deg;
use crate::pilot::{AgentMode, Mode, PatrolEvent};
use crate::protocol::{
    encode, read_frame, AlarmSignal, Bye, CommandAck, CommandKind, Hello, Message, OperatorCommand, ReadError,
    TelemetryFrame, VideoFrameStub,
};
use crate::scenario::{Directive, Supervisor, TickRecord};
use crate::world::{MotionCommand, Pose};

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub telemetry_hz: f64,
    pub video_fps: f64,
    /// Outgoing queue length.
    pub buffer: usize,
    /// Sim seconds per wall second; `None` runs as fast as possible.
    pub pace: Option<f64>,
    pub connect_timeout: Duration,
    /// How long [`AgentLink::finish`] waits for the center to confirm.
    pub close_timeout: Duration,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            telemetry_hz: 10.0,
            video_fps: 15.0,
            buffer: 4096,
            pace: None,
            connect_timeout: Duration::from_secs(3),
            close_timeout: Duration::from_secs(5),
        }
    }
}

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("center address `{0}` does not resolve")]
    Resolve(String),
    #[error("center at {addr} unreachable: {source}")]
    Unreachable { addr: String, source: io::Error },
}

/// One operator command as the agent saw it.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandLogEntry {
    pub t: f64,
    pub command: OperatorCommand,
    pub accepted: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub dropped: u64,
    /// The center confirmed the session close.
    pub confirmed: bool,
    pub commands: Vec<CommandLogEntry>,
}

#[derive(Default)]
struct OutboxState {
    queue: VecDeque<Message>,
    closed: bool,
    dropped: u64,
}

struct Outbox {
    cap: usize,
    state: Mutex<OutboxState>,
    ready: Condvar,
}

fn droppable(m: &Message) -> bool {
    matches!(m, Message::Telemetry(_) | Message::Video(_))
}

impl Outbox {
    fn new(cap: usize) -> Self {
        Self {
            cap: cap.max(1),
            state: Mutex::new(OutboxState::default()),
            ready: Condvar::new(),
        }
    }

    fn push(&self, msg: Message) {
        let mut s = self.state.lock().expect("outbox lock");
        if s.closed {
            return;
        }
        if s.queue.len() >= self.cap {
            if let Some(i) = s.queue.iter().position(droppable) {
                s.queue.remove(i);
                s.dropped += 1;
            } else if droppable(&msg) {
                s.dropped += 1;
                return;
            }
        }
        s.queue.push_back(msg);
        self.ready.notify_one();
    }

    /// Blocks for the next message; `None` once closed and drained. The flag
    /// says whether more messages are already waiting.
    fn pop(&self) -> Option<(Message, bool)> {
        let mut s = self.state.lock().expect("outbox lock");
        loop {
            if let Some(m) = s.queue.pop_front() {
                return Some((m, !s.queue.is_empty()));
            }
            if s.closed {
                return None;
            }
            s = self.ready.wait(s).expect("outbox lock");
        }
    }

    fn close(&self) {
        self.state.lock().expect("outbox lock").closed = true;
        self.ready.notify_all();
    }

    fn dropped(&self) -> u64 {
        self.state.lock().expect("outbox lock").dropped
    }
}

enum Inbound {
    Command(OperatorCommand),
    Bye,
    Closed,
}

fn writer_loop(stream: TcpStream, outbox: Arc<Outbox>) -> io::Result<()> {
    let mut w = io::BufWriter::new(stream);
    while let Some((msg, more)) = outbox.pop() {
        match encode(&msg) {
            Ok(frame) => w.write_all(&frame)?,
            // Only reachable with a corrupt pose or similar; skip it.
            Err(_) => continue,
        }
        if !more {
            w.flush()?;
        }
    }
    w.flush()
}

fn reader_loop(mut stream: TcpStream, tx: Sender<Inbound>) {
    loop {
        let msg = match read_frame(&mut stream) {
            Ok(Some(m)) => m,
            Ok(None) => break,
            Err(ReadError::Decode(e)) if e.is_recoverable() => continue,
            Err(_) => break,
        };
        let sent = match msg {
            Message::Command(c) => tx.send(Inbound::Command(c)),
            Message::Bye(_) => {
                let _ = tx.send(Inbound::Bye);
                return;
            }
            _ => Ok(()),
        };
        if sent.is_err() {
            return;
        }
    }
    let _ = tx.send(Inbound::Closed);
}

/// Evenly spaced sim-time emitter.
#[derive(Debug, Clone, Copy)]
struct Cadence {
    period: f64,
    origin: Option<f64>,
    index: u64,
}

impl Cadence {
    fn new(hz: f64) -> Self {
        Self {
            period: 1.0 / hz,
            origin: None,
            index: 0,
        }
    }

    /// Emission times falling in `[start, end)`, or at `start` for a
    /// zero-length tick.
    fn due(&mut self, start: f64, end: f64) -> Vec<f64> {
        let origin = *self.origin.get_or_insert(start);
        let mut out = Vec::new();
        loop {
            let s = origin + self.index as f64 * self.period;
            if s < end || s <= start {
                out.push(s);
                self.index += 1;
            } else {
                return out;
            }
        }
    }
}

/// Pose, battery and odometer at time `s` within a tick. Sonar and HMS
/// are held at the values sensed when the tick began.
fn interpolate(rec: &TickRecord, s: f64, seq: u64) -> TelemetryFrame {
    let frac = if rec.elapsed > 0.0 {
        ((s - rec.t) / rec.elapsed).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let a = rec.frame.pose;
    let b = rec.end_pose;
    let pose = Pose::new(
        a.x + (b.x - a.x) * frac,
        a.y + (b.y - a.y) * frac,
        normalize_deg(a.heading + normalize_deg(b.heading - a.heading) * frac),
    );
    let moved = match rec.command {
        MotionCommand::Forward(_) => (b.position() - a.position()).norm(),
        _ => 0.0,
    };
    TelemetryFrame {
        seq,
        t_sim: s,
        pose,
        sonar: rec.frame.sonar,
        hms: rec.frame.hms,
        battery_remaining: (rec.frame.battery_remaining - (s - rec.t)).max(0.0),
        mode: rec.mode,
        odometer: (rec.odometer - moved * (1.0 - frac)).max(0.0),
    }
}

pub struct AgentLink {
    cfg: LinkConfig,
    outbox: Arc<Outbox>,
    inbound: Receiver<Inbound>,
    stream: TcpStream,
    writer: Option<JoinHandle<io::Result<()>>>,
    reader: Option<JoinHandle<()>>,
    telemetry: Cadence,
    video: Cadence,
    tel_seq: u64,
    vid_seq: u64,
    manual: bool,
    connected: bool,
    clock: Option<(Instant, f64)>,
    log: Vec<CommandLogEntry>,
}

impl AgentLink {
    pub fn connect(addr: &str, hello: Hello, cfg: LinkConfig) -> Result<Self, LinkError> {
        let addrs: Vec<_> = addr
            .to_socket_addrs()
            .map_err(|_| LinkError::Resolve(addr.to_owned()))?
            .collect();
        let mut last = io::Error::new(io::ErrorKind::NotFound, "no addresses");
        let mut stream = None;
        for a in &addrs {
            match TcpStream::connect_timeout(a, cfg.connect_timeout) {
                Ok(s) => {
                    stream = Some(s);
                    break;
                }
                Err(e) => last = e,
            }
        }
        let stream = stream.ok_or_else(|| LinkError::Unreachable {
            addr: addr.to_owned(),
            source: last,
        })?;
        let unreachable = |source| LinkError::Unreachable {
            addr: addr.to_owned(),
            source,
        };
        stream.set_nodelay(true).map_err(unreachable)?;
        let outbox = Arc::new(Outbox::new(cfg.buffer));
        outbox.push(Message::Hello(hello));

        let (tx, rx) = mpsc::channel();
        let w = stream.try_clone().map_err(unreachable)?;
        let r = stream.try_clone().map_err(unreachable)?;
        let ob = Arc::clone(&outbox);
        let writer = thread::spawn(move || writer_loop(w, ob));
        let reader = thread::spawn(move || reader_loop(r, tx));
        Ok(Self {
            telemetry: Cadence::new(cfg.telemetry_hz),
            video: Cadence::new(cfg.video_fps),
            cfg,
            outbox,
            inbound: rx,
            stream,
            writer: Some(writer),
            reader: Some(reader),
            tel_seq: 0,
            vid_seq: 0,
            manual: false,
            connected: true,
            clock: None,
            log: Vec::new(),
        })
    }

    pub fn dropped(&self) -> u64 {
        self.outbox.dropped()
    }

    pub fn connected(&self) -> bool {
        self.connected
    }

    pub fn commands(&self) -> &[CommandLogEntry] {
        &self.log
    }

    fn pace(&mut self, t: f64) {
        let Some(rate) = self.cfg.pace.filter(|r| *r > 0.0) else {
            return;
        };
        let (start, t0) = *self.clock.get_or_insert((Instant::now(), t));
        let target = start + Duration::from_secs_f64(((t - t0) / rate).max(0.0));
        if let Some(wait) = target.checked_duration_since(Instant::now()) {
            thread::sleep(wait);
        }
    }

    fn handle(&mut self, t: f64, cmd: OperatorCommand) -> Option<Directive> {
        let verdict: Result<Option<Directive>, &str> = match cmd.kind {
            CommandKind::Stop => {
                self.manual = true;
                Ok(Some(Directive::Halt))
            }
            CommandKind::StartPatrol if self.manual => {
                self.manual = false;
                Ok(Some(Directive::Resume))
            }
            CommandKind::StartPatrol => Err("already patrolling"),
            CommandKind::ManualTurn(d) if self.manual => Ok(Some(Directive::Drive(MotionCommand::Turn(d)))),
            CommandKind::ManualForward(d) if self.manual => {
                Ok(Some(Directive::Drive(MotionCommand::Forward(d))))
            }
            CommandKind::ManualTurn(_) | CommandKind::ManualForward(_) => {
                Err("manual moves need manual override; send STOP first")
            }
            CommandKind::CameraPan(d) => Ok(Some(Directive::CameraPan(d))),
            CommandKind::AckAlarm => Ok(None),
        };
        let (accepted, reason, directive) = match verdict {
            Ok(d) => (true, String::new(), d),
            Err(r) => (false, r.to_owned(), None),
        };
        self.outbox.push(Message::CommandAck(CommandAck {
            id: cmd.id,
            accepted,
            reason: reason.clone(),
        }));
        self.log.push(CommandLogEntry {
            t,
            command: cmd,
            accepted,
            reason,
        });
        directive
    }

    /// Says goodbye, flushes the queue and waits for the center to confirm.
    pub fn finish(mut self, reason: &str) -> LinkReport {
        self.outbox.push(Message::Bye(Bye {
            reason: reason.to_owned(),
        }));
        self.outbox.close();
        let wrote = self
            .writer
            .take()
            .is_some_and(|h| h.join().map(|r| r.is_ok()).unwrap_or(false));
        let mut confirmed = false;
        if wrote && self.connected {
            let deadline = Instant::now() + self.cfg.close_timeout;
            while let Some(left) = deadline.checked_duration_since(Instant::now()) {
                match self.inbound.recv_timeout(left) {
                    Ok(Inbound::Bye) => {
                        confirmed = true;
                        break;
                    }
                    Ok(Inbound::Command(_)) => {}
                    Ok(Inbound::Closed) | Err(RecvTimeoutError::Disconnected) | Err(RecvTimeoutError::Timeout) => {
                        break
                    }
                }
            }
        }
        let _ = self.stream.shutdown(Shutdown::Both);
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
        LinkReport {
            dropped: self.outbox.dropped(),
            confirmed,
            commands: std::mem::take(&mut self.log),
        }
    }
}

impl Drop for AgentLink {
    fn drop(&mut self) {
        self.outbox.close();
        let _ = self.stream.shutdown(Shutdown::Both);
    }
}

impl Supervisor for AgentLink {
    fn poll(&mut self, t: f64) -> Vec<Directive> {
        self.pace(t);
        let mut out = Vec::new();
        while let Ok(msg) = self.inbound.try_recv() {
            match msg {
                Inbound::Command(c) => out.extend(self.handle(t, c)),
                Inbound::Bye | Inbound::Closed => self.connected = false,
            }
        }
        out
    }

    fn record(&mut self, rec: &TickRecord) {
        self.manual = matches!(rec.mode, AgentMode::Manual | AgentMode::Patrol(Mode::Alarm));
        for e in &rec.events {
            if let PatrolEvent::AlarmRaised { cause, t, pose } = e {
                self.outbox.push(Message::Alarm(AlarmSignal {
                    t_sim: *t,
                    cause: *cause,
                    pose: *pose,
                }));
            }
        }
        let end = rec.t + rec.elapsed;
        for s in self.telemetry.due(rec.t, end) {
            let frame = interpolate(rec, s, self.tel_seq);
            self.tel_seq += 1;
            self.outbox.push(Message::Telemetry(frame));
        }
        for s in self.video.due(rec.t, end) {
            self.outbox.push(Message::Video(VideoFrameStub::synthetic(self.vid_seq, s)));
            self.vid_seq += 1;
        }
    }

    fn hold_on_alarm(&self) -> bool {
        true
    }
}
