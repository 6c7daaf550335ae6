//! Agent/center wire protocol.
//!
//! Every frame is a 4-byte big-endian length `n`, then `n` bytes: a version
//! byte (currently 1), a message tag, and a `key=value` text body. A whole
//! frame, length prefix included, is at most [`MAX_FRAME`] bytes.

mod codec;
mod message;

pub use codec::{
    decode, decode_payload, encode, read_frame, write_frame, DecodeError, EncodeError, FrameReader,
    ReadError, MAX_FRAME, VERSION,
};
pub use message::{
    Bye, CommandAck, CommandKind, Hello, Message, OperatorCommand, TelemetryFrame, VideoFrameStub,
    AlarmSignal, MANUAL_FORWARD_MAX, VIDEO_HEIGHT, VIDEO_PAYLOAD_MAX, VIDEO_WIDTH,
};
