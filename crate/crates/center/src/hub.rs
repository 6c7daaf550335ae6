use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::{broadcast, mpsc};

use patrol_core::pilot::AgentMode;
use patrol_core::protocol::{
    CommandAck, CommandKind, DecodeError, Hello, Message, OperatorCommand, TelemetryFrame,
};
use patrol_core::world::WorldMap;

use crate::alarm::{AlarmState, AlarmStatus};
use crate::config::CenterConfig;
use crate::storage::{SessionWriter, Storage};

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Open,
    /// The agent said goodbye and the log was flushed.
    Closed,
    /// The connection dropped without a goodbye.
    Disconnected,
    /// The stream could not be framed any more.
    Failed,
    /// Found open after a center restart.
    Interrupted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub agent_id: String,
    pub scenario: String,
    pub map: String,
    pub started_at: u64,
    pub ended_at: Option<u64>,
    pub status: SessionStatus,
    pub telemetry: u64,
    pub video: u64,
    pub last_seq: Option<u64>,
    pub gaps: u64,
    pub duplicates: u64,
    pub decode_errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LiveEvent {
    Telemetry { session: String, frame: TelemetryFrame },
    Alarm { alarm: AlarmState },
    Session { session: SessionInfo },
    Command { command: OperatorCommand, outcome: CommandOutcome },
    CommandAck { session: String, ack: CommandAck },
    Gap { session: String, from: u64, to: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CommandOutcome {
    Forwarded { session: String },
    Queued,
    /// Handled at the center (alarm acknowledgment).
    Applied,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Rejected(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CommandRequest {
    pub kind: String,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub operator_id: String,
    /// Target session; the most recently opened one when absent.
    #[serde(default)]
    pub session: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandReceipt {
    pub command: OperatorCommand,
    pub outcome: CommandOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentView {
    pub session: String,
    pub agent_id: String,
    pub mode: Option<AgentMode>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatusView {
    pub alarm: AlarmState,
    pub agents: Vec<AgentView>,
    pub latest: Option<TelemetryFrame>,
    pub pending_commands: usize,
    pub control_mode: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct HealthView {
    pub ok: bool,
    pub storage_error: Option<String>,
    pub storage_failures: u64,
    pub sessions_open: usize,
    pub uptime_s: f64,
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("storage: {0}")]
    Io(#[from] std::io::Error),
}

struct AgentHandle {
    tx: mpsc::UnboundedSender<Message>,
    mode: Option<AgentMode>,
    agent_id: String,
}

#[derive(Default)]
struct State {
    alarm: AlarmState,
    sessions: BTreeMap<String, SessionInfo>,
    agents: BTreeMap<String, AgentHandle>,
    /// Most recently opened live session.
    newest: Option<String>,
    latest: Option<TelemetryFrame>,
    pending: VecDeque<OperatorCommand>,
    storage_error: Option<String>,
    storage_failures: u64,
}

/// Shared state behind the agent listener and the operator API. All
/// mutations go through one lock, which serializes the alarm machine.
pub struct Center {
    cfg: CenterConfig,
    storage: Storage,
    map: Option<WorldMap>,
    state: Mutex<State>,
    live: broadcast::Sender<LiveEvent>,
    next_command: AtomicU64,
    next_session: AtomicU64,
    started: Instant,
}

impl Center {
    pub fn new(cfg: CenterConfig, storage: Storage, map: Option<WorldMap>) -> std::io::Result<Self> {
        let mut state = State::default();
        for mut info in storage.load_meta()? {
            if info.status == SessionStatus::Open {
                info.status = SessionStatus::Interrupted;
                storage.write_meta(&info)?;
            }
            state.sessions.insert(info.id.clone(), info);
        }
        if let Some(keep) = cfg.retention {
            while state.sessions.len() > keep {
                let (id, _) = state.sessions.pop_first().expect("non-empty");
                storage.remove_session(&id)?;
            }
        }
        let (live, _) = broadcast::channel(1024);
        Ok(Self {
            cfg,
            storage,
            map,
            state: Mutex::new(state),
            live,
            next_command: AtomicU64::new(1),
            next_session: AtomicU64::new(0),
            started: Instant::now(),
        })
    }

    pub fn config(&self) -> &CenterConfig {
        &self.cfg
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn map(&self) -> Option<&WorldMap> {
        self.map.as_ref()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<LiveEvent> {
        self.live.subscribe()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().expect("center state lock")
    }

    fn emit(&self, ev: LiveEvent) {
        let _ = self.live.send(ev);
    }

    fn log(&self, st: &mut State, event: &str, fields: &[(&str, String)]) {
        if let Err(e) = self.storage.log_event(now_ms(), event, fields) {
            Self::storage_failed(st, &e);
        }
    }

    fn storage_failed(st: &mut State, e: &std::io::Error) {
        tracing::error!("storage failure: {e}");
        st.storage_error = Some(e.to_string());
        st.storage_failures += 1;
    }

    /// Records a failed append; the session stays open.
    pub fn report_storage_error(&self, e: &std::io::Error) {
        Self::storage_failed(&mut self.lock(), e);
    }

    fn write_meta(&self, st: &mut State, id: &str) {
        if let Some(info) = st.sessions.get(id) {
            if let Err(e) = self.storage.write_meta(info) {
                Self::storage_failed(st, &e);
            }
        }
    }

    /// Opens a session for a newly connected agent. Commands queued while no
    /// agent was connected are delivered first.
    pub fn open_session(
        &self,
        hello: &Hello,
    ) -> std::io::Result<(String, SessionWriter, mpsc::UnboundedReceiver<Message>)> {
        let now = now_ms();
        let id = format!("{now:013}-{:04}", self.next_session.fetch_add(1, Ordering::Relaxed));
        let writer = self.storage.create_session(&id)?;
        let (tx, rx) = mpsc::unbounded_channel();
        let info = SessionInfo {
            id: id.clone(),
            agent_id: hello.agent_id.clone(),
            scenario: hello.scenario.clone(),
            map: hello.map.clone(),
            started_at: now,
            ended_at: None,
            status: SessionStatus::Open,
            telemetry: 0,
            video: 0,
            last_seq: None,
            gaps: 0,
            duplicates: 0,
            decode_errors: 0,
        };
        let mut st = self.lock();
        for cmd in st.pending.drain(..) {
            let _ = tx.send(Message::Command(cmd));
        }
        st.sessions.insert(id.clone(), info.clone());
        st.agents.insert(
            id.clone(),
            AgentHandle {
                tx,
                mode: None,
                agent_id: hello.agent_id.clone(),
            },
        );
        st.newest = Some(id.clone());
        self.write_meta(&mut st, &id);
        self.log(
            &mut st,
            "session_open",
            &[("session", id.clone()), ("agent", hello.agent_id.clone())],
        );
        drop(st);
        self.emit(LiveEvent::Session { session: info });
        Ok((id, writer, rx))
    }

    /// Applies the side effects of a message that is already stored.
    pub fn observe(&self, session: &str, msg: &Message) {
        let mut st = self.lock();
        match msg {
            Message::Telemetry(f) => {
                let Some(info) = st.sessions.get_mut(session) else { return };
                info.telemetry += 1;
                let mut gap = None;
                let mut duplicate = false;
                match info.last_seq {
                    Some(last) if f.seq > last + 1 => gap = Some((last + 1, f.seq - 1)),
                    Some(last) if f.seq <= last => duplicate = true,
                    None if f.seq > 0 => gap = Some((0, f.seq - 1)),
                    _ => {}
                }
                if duplicate {
                    info.duplicates += 1;
                } else {
                    info.last_seq = Some(f.seq);
                }
                if gap.is_some() {
                    info.gaps += 1;
                }
                if let Some(a) = st.agents.get_mut(session) {
                    a.mode = Some(f.mode);
                }
                st.latest = Some(f.clone());
                if let Some((from, to)) = gap {
                    self.log(
                        &mut st,
                        "seq_gap",
                        &[("session", session.to_owned()), ("from", from.to_string()), ("to", to.to_string())],
                    );
                    self.emit(LiveEvent::Gap { session: session.to_owned(), from, to });
                }
                if duplicate {
                    self.log(
                        &mut st,
                        "seq_duplicate",
                        &[("session", session.to_owned()), ("seq", f.seq.to_string())],
                    );
                }
                drop(st);
                self.emit(LiveEvent::Telemetry { session: session.to_owned(), frame: f.clone() });
            }
            Message::Video(_) => {
                if let Some(info) = st.sessions.get_mut(session) {
                    info.video += 1;
                }
            }
            Message::Alarm(a) => {
                let now = now_ms();
                let fresh = st.alarm.raise(a.cause, a.t_sim, session, now);
                let base = [
                    ("session", session.to_owned()),
                    ("cause", a.cause.to_string()),
                    ("t_sim", a.t_sim.to_string()),
                    ("x", a.pose.x.to_string()),
                    ("y", a.pose.y.to_string()),
                ];
                if fresh {
                    self.log(&mut st, "alarm_raised", &base);
                    // Simulated building actuators: every entrance closes.
                    self.log(
                        &mut st,
                        "lockdown",
                        &[("session", session.to_owned()), ("actuators", "all_entrances".into()), ("state", "closed".into())],
                    );
                    let stop = self.make_command(CommandKind::Stop, "center");
                    self.log(&mut st, "command", &command_fields(&stop, "forwarded"));
                    if let Some(agent) = st.agents.get(session) {
                        let _ = agent.tx.send(Message::Command(stop));
                    }
                } else {
                    self.log(&mut st, "alarm_repeat", &base);
                }
                let alarm = st.alarm.clone();
                drop(st);
                self.emit(LiveEvent::Alarm { alarm });
            }
            Message::CommandAck(ack) => {
                self.log(
                    &mut st,
                    "command_ack",
                    &[
                        ("session", session.to_owned()),
                        ("id", ack.id.to_string()),
                        ("accepted", ack.accepted.to_string()),
                        ("reason", ack.reason.clone()),
                    ],
                );
                drop(st);
                self.emit(LiveEvent::CommandAck { session: session.to_owned(), ack: ack.clone() });
            }
            Message::Hello(_) | Message::Bye(_) | Message::Command(_) => {}
        }
    }

    pub fn decode_error(&self, session: &str, err: &DecodeError) {
        let mut st = self.lock();
        if let Some(info) = st.sessions.get_mut(session) {
            info.decode_errors += 1;
        }
        self.log(
            &mut st,
            "decode_error",
            &[("session", session.to_owned()), ("error", err.to_string())],
        );
    }

    /// Ends a session. On a clean close the agent is sent its goodbye,
    /// which the caller must only request after the log is synced.
    pub fn close_session(&self, session: &str, status: SessionStatus) {
        let mut st = self.lock();
        if let Some(agent) = st.agents.remove(session) {
            if status == SessionStatus::Closed {
                let _ = agent.tx.send(Message::Bye(patrol_core::protocol::Bye { reason: "flushed".into() }));
            }
        }
        if st.newest.as_deref() == Some(session) {
            st.newest = st.agents.keys().next_back().cloned();
        }
        let info = st.sessions.get_mut(session).map(|info| {
            info.status = status;
            info.ended_at = Some(now_ms());
            info.clone()
        });
        self.write_meta(&mut st, session);
        self.log(
            &mut st,
            "session_close",
            &[("session", session.to_owned()), ("status", format!("{status:?}").to_lowercase())],
        );
        drop(st);
        if let Some(info) = info {
            self.emit(LiveEvent::Session { session: info });
        }
    }

    fn make_command(&self, kind: CommandKind, operator: &str) -> OperatorCommand {
        OperatorCommand {
            id: self.next_command.fetch_add(1, Ordering::Relaxed),
            kind,
            issued_at: now_ms(),
            operator_id: operator.to_owned(),
        }
    }

    /// Validates an operator command against the current state and forwards
    /// it to the agent ahead of anything the agent decides for itself.
    pub fn submit(&self, req: &CommandRequest) -> Result<CommandReceipt, CommandError> {
        let kind = CommandKind::from_parts(&req.kind, req.value).map_err(CommandError::Invalid)?;
        let operator = if req.operator_id.is_empty() { "operator" } else { req.operator_id.as_str() };
        let mut st = self.lock();
        let target = match &req.session {
            Some(s) if st.agents.contains_key(s) => Some(s.clone()),
            Some(s) => {
                let reason = format!("session `{s}` has no connected agent");
                return Err(self.reject(&mut st, kind, operator, reason));
            }
            None => st.newest.clone(),
        };
        let mode = target.as_ref().and_then(|s| st.agents.get(s)).and_then(|a| a.mode);

        let verdict = match kind {
            CommandKind::AckAlarm => match st.alarm.acknowledge(operator) {
                Ok(()) => Ok(true),
                Err(e) => Err(e.to_string()),
            },
            CommandKind::StartPatrol if st.alarm.status == AlarmStatus::Active => {
                Err("acknowledge the active alarm before resuming the patrol".to_owned())
            }
            CommandKind::ManualTurn(_) | CommandKind::ManualForward(_)
                if target.is_some() && mode != Some(AgentMode::Manual) =>
            {
                Err("manual moves need manual override; send STOP first".to_owned())
            }
            _ => Ok(false),
        };
        let applied = match verdict {
            Ok(a) => a,
            Err(reason) => return Err(self.reject(&mut st, kind, operator, reason)),
        };
        let cmd = self.make_command(kind, operator);
        let outcome = match &target {
            Some(s) => {
                let agent = st.agents.get(s).expect("checked above");
                let _ = agent.tx.send(Message::Command(cmd.clone()));
                if applied { CommandOutcome::Applied } else { CommandOutcome::Forwarded { session: s.clone() } }
            }
            None if applied => CommandOutcome::Applied,
            None if self.cfg.queue_when_offline => {
                st.pending.push_back(cmd.clone());
                CommandOutcome::Queued
            }
            None => {
                return Err(self.reject(&mut st, kind, operator, "no agent connected".to_owned()));
            }
        };
        let label = match &outcome {
            CommandOutcome::Forwarded { .. } => "forwarded",
            CommandOutcome::Queued => "queued",
            CommandOutcome::Applied => "applied",
        };
        self.log(&mut st, "command", &command_fields(&cmd, label));
        let alarm = applied.then(|| st.alarm.clone());
        drop(st);
        if let Some(alarm) = alarm {
            self.log_ack(&alarm);
            self.emit(LiveEvent::Alarm { alarm });
        }
        self.emit(LiveEvent::Command { command: cmd.clone(), outcome: outcome.clone() });
        Ok(CommandReceipt { command: cmd, outcome })
    }

    fn log_ack(&self, alarm: &AlarmState) {
        let mut st = self.lock();
        self.log(
            &mut st,
            "alarm_acknowledged",
            &[("by", alarm.acknowledged_by.clone().unwrap_or_default())],
        );
    }

    fn reject(&self, st: &mut State, kind: CommandKind, operator: &str, reason: String) -> CommandError {
        self.log(
            st,
            "command_rejected",
            &[("kind", kind.to_string()), ("operator", operator.to_owned()), ("reason", reason.clone())],
        );
        CommandError::Rejected(reason)
    }

    pub fn status(&self) -> StatusView {
        let st = self.lock();
        let agents: Vec<AgentView> = st
            .agents
            .iter()
            .map(|(id, a)| AgentView { session: id.clone(), agent_id: a.agent_id.clone(), mode: a.mode })
            .collect();
        let manual = st
            .newest
            .as_ref()
            .and_then(|s| st.agents.get(s))
            .is_some_and(|a| a.mode == Some(AgentMode::Manual));
        StatusView {
            alarm: st.alarm.clone(),
            agents,
            latest: st.latest.clone(),
            pending_commands: st.pending.len(),
            control_mode: if manual { "MANUAL" } else { "AUTONOMOUS" },
        }
    }

    pub fn alarm(&self) -> AlarmState {
        self.lock().alarm.clone()
    }

    pub fn sessions(&self) -> Vec<SessionInfo> {
        self.lock().sessions.values().cloned().collect()
    }

    pub fn session(&self, id: &str) -> Option<SessionInfo> {
        self.lock().sessions.get(id).cloned()
    }

    pub fn health(&self) -> HealthView {
        let st = self.lock();
        HealthView {
            ok: st.storage_error.is_none(),
            storage_error: st.storage_error.clone(),
            storage_failures: st.storage_failures,
            sessions_open: st.agents.len(),
            uptime_s: self.started.elapsed().as_secs_f64(),
        }
    }

    /// Stored telemetry of a session with `from <= t_sim <= to`, in arrival
    /// order. Reads the session file directly and takes no lock.
    pub fn telemetry(&self, id: &str, from: Option<f64>, to: Option<f64>) -> Result<Vec<TelemetryFrame>, QueryError> {
        if self.session(id).is_none() {
            return Err(QueryError::NotFound(id.to_owned()));
        }
        let from = from.unwrap_or(f64::NEG_INFINITY);
        let to = to.unwrap_or(f64::INFINITY);
        Ok(self
            .storage
            .read_session(id)?
            .iter()
            .filter_map(|r| match r.message() {
                Ok(Message::Telemetry(f)) if f.t_sim >= from && f.t_sim <= to => Some(f),
                _ => None,
            })
            .collect())
    }
}

fn command_fields(cmd: &OperatorCommand, status: &str) -> Vec<(&'static str, String)> {
    vec![
        ("id", cmd.id.to_string()),
        ("kind", cmd.kind.to_string()),
        ("operator", cmd.operator_id.clone()),
        ("status", status.to_owned()),
    ]
}
