//! On-disk session logs.
//!
//! Each session is a `<id>.frames` file of records, each record being an
//! 8-byte big-endian arrival time (Unix ms) followed by the protocol frame
//! exactly as received, length prefix included. Session metadata lives in
//! `<id>.json`; center-wide events (lockdowns, operator actions, seq gaps)
//! are `key=value` lines in `center.log`.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use patrol_core::kv::{KvRecord, KvWriter};
use patrol_core::protocol::{decode_payload, DecodeError, Message};

use crate::hub::SessionInfo;

const FRAMES: &str = "frames";
const META: &str = "json";
const CENTER_LOG: &str = "center.log";

#[derive(Debug, Clone, PartialEq)]
pub struct StoredRecord {
    pub received_at: u64,
    /// Length-prefixed protocol frame.
    pub frame: Vec<u8>,
}

impl StoredRecord {
    pub fn message(&self) -> Result<Message, DecodeError> {
        decode_payload(&self.frame[4..])
    }
}

#[derive(Debug)]
pub struct Storage {
    dir: PathBuf,
    log: Mutex<Option<File>>,
}

impl Storage {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            log: Mutex::new(None),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{id}.{ext}"))
    }

    pub fn create_session(&self, id: &str) -> io::Result<SessionWriter> {
        let file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(self.path(id, FRAMES))?;
        Ok(SessionWriter { file })
    }

    /// Every intact record of a session, in arrival order. A record cut
    /// short by a crash ends the list.
    pub fn read_session(&self, id: &str) -> io::Result<Vec<StoredRecord>> {
        let mut bytes = Vec::new();
        File::open(self.path(id, FRAMES))?.read_to_end(&mut bytes)?;
        let mut out = Vec::new();
        let mut rest = bytes.as_slice();
        while rest.len() >= 12 {
            let received_at = u64::from_be_bytes(rest[..8].try_into().expect("8 bytes"));
            let n = u32::from_be_bytes(rest[8..12].try_into().expect("4 bytes")) as usize;
            let Some(frame) = rest.get(8..12 + n) else { break };
            out.push(StoredRecord {
                received_at,
                frame: frame.to_vec(),
            });
            rest = &rest[12 + n..];
        }
        Ok(out)
    }

    pub fn write_meta(&self, info: &SessionInfo) -> io::Result<()> {
        let tmp = self.path(&info.id, "json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(info).map_err(io::Error::other)?)?;
        fs::rename(tmp, self.path(&info.id, META))
    }

    pub fn load_meta(&self) -> io::Result<Vec<SessionInfo>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some(META) {
                continue;
            }
            let bytes = fs::read(&path)?;
            match serde_json::from_slice(&bytes) {
                Ok(info) => out.push(info),
                Err(e) => tracing::warn!("skipping {}: {e}", path.display()),
            }
        }
        out.sort_by(|a: &SessionInfo, b| a.id.cmp(&b.id));
        Ok(out)
    }

    pub fn remove_session(&self, id: &str) -> io::Result<()> {
        fs::remove_file(self.path(id, FRAMES))?;
        fs::remove_file(self.path(id, META))
    }

    /// Appends one line to `center.log`.
    pub fn log_event(&self, at: u64, event: &str, fields: &[(&str, String)]) -> io::Result<()> {
        let mut w = KvWriter::new();
        w.put("at", at).put("event", event);
        for (k, v) in fields {
            w.put(k, v);
        }
        let mut line = w.finish();
        line.push('\n');
        let mut guard = self.log.lock().expect("log lock");
        if guard.is_none() {
            *guard = Some(
                OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(self.dir.join(CENTER_LOG))?,
            );
        }
        let file = guard.as_mut().expect("opened above");
        file.write_all(line.as_bytes())?;
        file.flush()
    }

    /// Parsed `center.log`, oldest first.
    pub fn read_events(&self) -> io::Result<Vec<BTreeMap<String, String>>> {
        let text = match fs::read_to_string(self.dir.join(CENTER_LOG)) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        Ok(text
            .lines()
            .filter_map(|l| KvRecord::parse(l).ok())
            .map(|r| {
                r.keys()
                    .map(|k| (k.to_owned(), r.raw(k).unwrap_or_default().to_owned()))
                    .collect()
            })
            .collect())
    }
}

#[derive(Debug)]
pub struct SessionWriter {
    file: File,
}

impl SessionWriter {
    /// Appends one record with a single write.
    pub fn append(&mut self, received_at: u64, frame: &[u8]) -> io::Result<()> {
        let mut rec = Vec::with_capacity(8 + frame.len());
        rec.extend_from_slice(&received_at.to_be_bytes());
        rec.extend_from_slice(frame);
        self.file.write_all(&rec)
    }

    pub fn sync(&mut self) -> io::Result<()> {
        self.file.sync_data()
    }
}
