use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::pilot::{AgentMode, AlarmCause};
use crate::world::{HmsPair, Pose, SonarTriple};

pub const VIDEO_WIDTH: u16 = 353;
pub const VIDEO_HEIGHT: u16 = 288;
/// Upper bound on a stub video payload, bytes.
pub const VIDEO_PAYLOAD_MAX: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub agent_id: String,
    pub scenario: String,
    /// Map name, so the center can serve the matching geometry.
    pub map: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub seq: u64,
    pub t_sim: f64,
    pub pose: Pose,
    pub sonar: SonarTriple,
    pub hms: HmsPair,
    pub battery_remaining: f64,
    pub mode: AgentMode,
    pub odometer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoFrameStub {
    pub seq: u64,
    pub t_sim: f64,
    pub width: u16,
    pub height: u16,
    pub payload: Vec<u8>,
}

impl VideoFrameStub {
    /// Deterministic test pattern keyed by `seq`.
    pub fn synthetic(seq: u64, t_sim: f64) -> Self {
        let payload = (0..256u32)
            .map(|i| ((i as u64).wrapping_mul(31) ^ seq.wrapping_mul(2_654_435_761)) as u8)
            .collect();
        Self {
            seq,
            t_sim,
            width: VIDEO_WIDTH,
            height: VIDEO_HEIGHT,
            payload,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmSignal {
    pub t_sim: f64,
    pub cause: AlarmCause,
    pub pose: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CommandKind {
    StartPatrol,
    Stop,
    ManualTurn(f64),
    ManualForward(f64),
    CameraPan(f64),
    AckAlarm,
}

/// Longest single manual forward move, cm.
pub const MANUAL_FORWARD_MAX: f64 = 1000.0;

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::StartPatrol => "START_PATROL",
            CommandKind::Stop => "STOP",
            CommandKind::ManualTurn(_) => "MANUAL_TURN",
            CommandKind::ManualForward(_) => "MANUAL_FORWARD",
            CommandKind::CameraPan(_) => "CAMERA_PAN",
            CommandKind::AckAlarm => "ACK_ALARM",
        }
    }

    pub fn argument(&self) -> Option<f64> {
        match *self {
            CommandKind::ManualTurn(v) | CommandKind::ManualForward(v) | CommandKind::CameraPan(v) => {
                Some(v)
            }
            _ => None,
        }
    }

    pub fn is_manual(&self) -> bool {
        matches!(self, CommandKind::ManualTurn(_) | CommandKind::ManualForward(_))
    }

    pub fn from_parts(name: &str, arg: Option<f64>) -> Result<Self, String> {
        let need = |arg: Option<f64>| arg.ok_or_else(|| format!("{name} needs an argument"));
        let none = |arg: Option<f64>, k| match arg {
            None => Ok(k),
            Some(_) => Err(format!("{name} takes no argument")),
        };
        let kind = match name {
            "START_PATROL" => none(arg, CommandKind::StartPatrol)?,
            "STOP" => none(arg, CommandKind::Stop)?,
            "ACK_ALARM" => none(arg, CommandKind::AckAlarm)?,
            "MANUAL_TURN" => CommandKind::ManualTurn(need(arg)?),
            "MANUAL_FORWARD" => CommandKind::ManualForward(need(arg)?),
            "CAMERA_PAN" => CommandKind::CameraPan(need(arg)?),
            other => return Err(format!("unknown command `{other}`")),
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            CommandKind::ManualTurn(d) | CommandKind::CameraPan(d) if !(-180.0..=180.0).contains(&d) => {
                Err(format!("{} angle {d} outside [-180, 180]", self.name()))
            }
            CommandKind::ManualForward(d) if !(0.0..=MANUAL_FORWARD_MAX).contains(&d) => Err(format!(
                "MANUAL_FORWARD distance {d} outside [0, {MANUAL_FORWARD_MAX}]"
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.argument() {
            Some(v) => write!(f, "{}({v})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

impl FromStr for CommandKind {
    type Err = String;

    /// `STOP`, `MANUAL_FORWARD(50)`, ...
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('(') {
            Some((name, rest)) => {
                let arg = rest
                    .strip_suffix(')')
                    .ok_or_else(|| format!("missing `)` in `{s}`"))?;
                let v: f64 = arg.trim().parse().map_err(|_| format!("bad argument in `{s}`"))?;
                Self::from_parts(name, Some(v))
            }
            None => Self::from_parts(s, None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorCommand {
    /// Assigned by the center, unique per process.
    pub id: u64,
    pub kind: CommandKind,
    /// Unix time, milliseconds.
    pub issued_at: u64,
    pub operator_id: String,
}

/// Agent's verdict on an operator command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandAck {
    pub id: u64,
    pub accepted: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bye {
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum Message {
    Telemetry(TelemetryFrame),
    Video(VideoFrameStub),
    Alarm(AlarmSignal),
    Command(OperatorCommand),
    Hello(Hello),
    Bye(Bye),
    CommandAck(CommandAck),
}

impl Message {
    pub fn tag(&self) -> u8 {
        match self {
            Message::Telemetry(_) => 1,
            Message::Video(_) => 2,
            Message::Alarm(_) => 3,
            Message::Command(_) => 4,
            Message::Hello(_) => 5,
            Message::Bye(_) => 6,
            Message::CommandAck(_) => 7,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Message::Telemetry(_) => "telemetry",
            Message::Video(_) => "video",
            Message::Alarm(_) => "alarm",
            Message::Command(_) => "command",
            Message::Hello(_) => "hello",
            Message::Bye(_) => "bye",
            Message::CommandAck(_) => "command_ack",
        }
    }
}
