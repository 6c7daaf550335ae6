use std::io::{self, Read, Write};

use base64::engine::general_purpose::STANDARD_NO_PAD;
use base64::Engine as _;
use thiserror::Error;

use super::message::*;
use crate::kv::{KvError, KvRecord, KvWriter};
use crate::pilot::AgentMode;
use crate::world::{HmsPair, Pose, SonarTriple, SONAR_MIN, SONAR_NO_ECHO};

pub const VERSION: u8 = 1;
/// Largest frame on the wire, including the length prefix.
pub const MAX_FRAME: usize = 1 << 20;
const HEADER: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("frame of {0} bytes exceeds the 1 MiB limit")]
    Oversize(usize),
    #[error("invalid {kind} message: {reason}")]
    Invalid { kind: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    /// More bytes are needed; `needed` is the total frame length if known.
    #[error("truncated frame: have {have} bytes, need {needed}")]
    Truncated { have: usize, needed: usize },
    #[error("declared frame length {0} exceeds the 1 MiB limit")]
    Oversize(usize),
    #[error("unsupported protocol version {0}")]
    UnknownVersion(u8),
    #[error("unknown message tag {0}")]
    UnknownTag(u8),
    #[error("bad body for tag {tag}: {reason}")]
    Body { tag: u8, reason: String },
}

impl DecodeError {
    /// Whether the frame boundary is still trustworthy, so a reader can
    /// skip this frame and continue with the next one.
    pub fn is_recoverable(&self) -> bool {
        matches!(
            self,
            DecodeError::UnknownVersion(_) | DecodeError::UnknownTag(_) | DecodeError::Body { .. }
        )
    }
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

fn invalid(kind: &'static str, reason: impl Into<String>) -> EncodeError {
    EncodeError::Invalid {
        kind,
        reason: reason.into(),
    }
}

fn check_finite(kind: &'static str, pairs: &[(&str, f64)]) -> Result<(), EncodeError> {
    match pairs.iter().find(|(_, v)| !v.is_finite()) {
        Some((k, v)) => Err(invalid(kind, format!("{k} is {v}"))),
        None => Ok(()),
    }
}

fn check_pose(kind: &'static str, p: &Pose) -> Result<(), EncodeError> {
    check_finite(kind, &[("x", p.x), ("y", p.y), ("heading", p.heading)])
}

fn check_sonar(s: &SonarTriple) -> Result<(), String> {
    for (k, v) in [("left", s.left), ("front", s.front), ("right", s.right)] {
        if !(SONAR_MIN..=SONAR_NO_ECHO).contains(&v) {
            return Err(format!("sonar {k} reading {v} outside [4, 255]"));
        }
    }
    Ok(())
}

fn check_video(v: &VideoFrameStub) -> Result<(), String> {
    if (v.width, v.height) != (VIDEO_WIDTH, VIDEO_HEIGHT) {
        return Err(format!("frame size {}x{} is not 353x288", v.width, v.height));
    }
    if v.payload.len() > VIDEO_PAYLOAD_MAX {
        return Err(format!("payload of {} bytes too large", v.payload.len()));
    }
    Ok(())
}

/// Checks the field-level invariants that decoding enforces.
fn validate(msg: &Message) -> Result<(), EncodeError> {
    let kind = msg.type_name();
    match msg {
        Message::Telemetry(m) => {
            check_finite(kind, &[("t_sim", m.t_sim), ("battery", m.battery_remaining), ("odometer", m.odometer)])?;
            check_pose(kind, &m.pose)?;
            check_sonar(&m.sonar).map_err(|r| invalid(kind, r))?;
            if m.battery_remaining < 0.0 || m.odometer < 0.0 {
                return Err(invalid(kind, "battery and odometer must be non-negative"));
            }
        }
        Message::Video(m) => {
            check_finite(kind, &[("t_sim", m.t_sim)])?;
            check_video(m).map_err(|r| invalid(kind, r))?;
        }
        Message::Alarm(m) => {
            check_finite(kind, &[("t_sim", m.t_sim)])?;
            check_pose(kind, &m.pose)?;
        }
        Message::Command(m) => m.kind.validate().map_err(|r| invalid(kind, r))?,
        Message::Hello(_) | Message::Bye(_) | Message::CommandAck(_) => {}
    }
    Ok(())
}

fn put_pose(w: &mut KvWriter, p: &Pose) {
    w.put("x", p.x).put("y", p.y).put("heading", p.heading);
}

fn body(msg: &Message) -> String {
    let mut w = KvWriter::new();
    match msg {
        Message::Telemetry(m) => {
            w.put("seq", m.seq).put("t", m.t_sim);
            put_pose(&mut w, &m.pose);
            w.put("left", m.sonar.left)
                .put("front", m.sonar.front)
                .put("right", m.sonar.right)
                .put_bool("hms_left", m.hms.left)
                .put_bool("hms_right", m.hms.right)
                .put("battery", m.battery_remaining)
                .put("mode", m.mode)
                .put("odometer", m.odometer);
        }
        Message::Video(m) => {
            w.put("seq", m.seq)
                .put("t", m.t_sim)
                .put("width", m.width)
                .put("height", m.height)
                .put("payload", STANDARD_NO_PAD.encode(&m.payload));
        }
        Message::Alarm(m) => {
            w.put("t", m.t_sim).put("cause", m.cause);
            put_pose(&mut w, &m.pose);
        }
        Message::Command(m) => {
            w.put("id", m.id).put("kind", m.kind.name());
            if let Some(v) = m.kind.argument() {
                w.put("arg", v);
            }
            w.put("issued_at", m.issued_at).put("operator", &m.operator_id);
        }
        Message::Hello(m) => {
            w.put("agent", &m.agent_id).put("scenario", &m.scenario).put("map", &m.map);
        }
        Message::Bye(m) => {
            w.put("reason", &m.reason);
        }
        Message::CommandAck(m) => {
            w.put("id", m.id).put_bool("accepted", m.accepted).put("reason", &m.reason);
        }
    }
    w.finish()
}

/// Serializes one message into a complete frame.
pub fn encode(msg: &Message) -> Result<Vec<u8>, EncodeError> {
    validate(msg)?;
    let body = body(msg);
    let total = HEADER + 2 + body.len();
    if total > MAX_FRAME {
        return Err(EncodeError::Oversize(total));
    }
    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(&((total - HEADER) as u32).to_be_bytes());
    out.push(VERSION);
    out.push(msg.tag());
    out.extend_from_slice(body.as_bytes());
    Ok(out)
}

fn pose(r: &KvRecord) -> Result<Pose, KvError> {
    Ok(Pose::new(r.finite("x")?, r.finite("y")?, r.finite("heading")?))
}

fn parse_body(tag: u8, rec: &KvRecord) -> Result<Message, String> {
    let e = |e: KvError| e.to_string();
    let msg = match tag {
        1 => {
            let m = TelemetryFrame {
                seq: rec.get("seq").map_err(e)?,
                t_sim: rec.finite("t").map_err(e)?,
                pose: pose(rec).map_err(e)?,
                sonar: SonarTriple {
                    left: rec.finite("left").map_err(e)?,
                    front: rec.finite("front").map_err(e)?,
                    right: rec.finite("right").map_err(e)?,
                },
                hms: HmsPair {
                    left: rec.flag("hms_left").map_err(e)?,
                    right: rec.flag("hms_right").map_err(e)?,
                },
                battery_remaining: rec.finite("battery").map_err(e)?,
                mode: rec
                    .str("mode")
                    .map_err(e)?
                    .parse::<AgentMode>()?,
                odometer: rec.finite("odometer").map_err(e)?,
            };
            check_sonar(&m.sonar)?;
            if m.battery_remaining < 0.0 || m.odometer < 0.0 {
                return Err("battery and odometer must be non-negative".into());
            }
            Message::Telemetry(m)
        }
        2 => {
            let payload = STANDARD_NO_PAD
                .decode(rec.str("payload").map_err(e)?)
                .map_err(|err| format!("payload: {err}"))?;
            let m = VideoFrameStub {
                seq: rec.get("seq").map_err(e)?,
                t_sim: rec.finite("t").map_err(e)?,
                width: rec.get("width").map_err(e)?,
                height: rec.get("height").map_err(e)?,
                payload,
            };
            check_video(&m)?;
            Message::Video(m)
        }
        3 => Message::Alarm(AlarmSignal {
            t_sim: rec.finite("t").map_err(e)?,
            cause: rec.str("cause").map_err(e)?.parse()?,
            pose: pose(rec).map_err(e)?,
        }),
        4 => {
            let arg = match rec.raw("arg") {
                Some(_) => Some(rec.finite("arg").map_err(e)?),
                None => None,
            };
            Message::Command(OperatorCommand {
                id: rec.get("id").map_err(e)?,
                kind: CommandKind::from_parts(rec.str("kind").map_err(e)?, arg)?,
                issued_at: rec.get("issued_at").map_err(e)?,
                operator_id: rec.str("operator").map_err(e)?.to_owned(),
            })
        }
        5 => Message::Hello(Hello {
            agent_id: rec.str("agent").map_err(e)?.to_owned(),
            scenario: rec.str("scenario").map_err(e)?.to_owned(),
            map: rec.str("map").map_err(e)?.to_owned(),
        }),
        6 => Message::Bye(Bye {
            reason: rec.str("reason").map_err(e)?.to_owned(),
        }),
        7 => Message::CommandAck(CommandAck {
            id: rec.get("id").map_err(e)?,
            accepted: rec.flag("accepted").map_err(e)?,
            reason: rec.str("reason").map_err(e)?.to_owned(),
        }),
        _ => unreachable!("tag checked by caller"),
    };
    Ok(msg)
}

/// Decodes the bytes that follow the length prefix.
///
/// Unknown body keys are ignored so newer agents can add fields.
pub fn decode_payload(payload: &[u8]) -> Result<Message, DecodeError> {
    let (&version, rest) = payload.split_first().ok_or(DecodeError::Truncated {
        have: HEADER,
        needed: HEADER + 2,
    })?;
    if version != VERSION {
        return Err(DecodeError::UnknownVersion(version));
    }
    let (&tag, body) = rest.split_first().ok_or(DecodeError::Truncated {
        have: HEADER + 1,
        needed: HEADER + 2,
    })?;
    if !(1..=7).contains(&tag) {
        return Err(DecodeError::UnknownTag(tag));
    }
    let reason = |reason: String| DecodeError::Body { tag, reason };
    let text = std::str::from_utf8(body).map_err(|err| reason(err.to_string()))?;
    if text.contains(['\n', '\r']) {
        return Err(reason("line break in body".into()));
    }
    let rec = KvRecord::parse(text).map_err(|err| reason(err.to_string()))?;
    parse_body(tag, &rec).map_err(reason)
}

fn declared_len(buf: &[u8]) -> Result<usize, DecodeError> {
    if buf.len() < HEADER {
        return Err(DecodeError::Truncated {
            have: buf.len(),
            needed: HEADER,
        });
    }
    let n = u32::from_be_bytes([buf[0], buf[1], buf[2], buf[3]]) as usize;
    if HEADER + n > MAX_FRAME {
        return Err(DecodeError::Oversize(HEADER + n));
    }
    Ok(n)
}

/// Decodes the first frame in `buf`, returning the message and the number of
/// bytes it occupied.
pub fn decode(buf: &[u8]) -> Result<(Message, usize), DecodeError> {
    let n = declared_len(buf)?;
    let total = HEADER + n;
    if buf.len() < total {
        return Err(DecodeError::Truncated {
            have: buf.len(),
            needed: total,
        });
    }
    decode_payload(&buf[HEADER..total]).map(|m| (m, total))
}

/// Incremental decoder for a byte stream.
///
/// A frame with a bad version, tag or body is reported and skipped; the next
/// frame is read from the declared length boundary. An oversize length
/// cannot be trusted, so the reader discards its buffer and reports
/// [`DecodeError::Oversize`].
#[derive(Debug, Default)]
pub struct FrameReader {
    buf: Vec<u8>,
}

impl FrameReader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Bytes held waiting for the rest of a frame.
    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Next complete frame, or `None` if more input is needed.
    pub fn next_frame(&mut self) -> Option<Result<Message, DecodeError>> {
        let n = match declared_len(&self.buf) {
            Ok(n) => n,
            Err(DecodeError::Truncated { .. }) => return None,
            Err(err) => {
                self.buf.clear();
                return Some(Err(err));
            }
        };
        let total = HEADER + n;
        if self.buf.len() < total {
            return None;
        }
        let result = decode_payload(&self.buf[HEADER..total]);
        self.buf.drain(..total);
        Some(result)
    }
}

/// Blocking read of one frame. `Ok(None)` on a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Message>, ReadError> {
    let mut len = [0u8; HEADER];
    let mut got = 0;
    while got < HEADER {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into()),
            Ok(k) => got += k,
            Err(err) if err.kind() == io::ErrorKind::Interrupted => {}
            Err(err) => return Err(err.into()),
        }
    }
    let n = declared_len(&len)?;
    let mut payload = vec![0u8; n];
    r.read_exact(&mut payload)?;
    Ok(Some(decode_payload(&payload)?))
}

pub fn write_frame<W: Write>(w: &mut W, msg: &Message) -> io::Result<()> {
    let frame = encode(msg).map_err(|err| io::Error::new(io::ErrorKind::InvalidInput, err))?;
    w.write_all(&frame)
}
