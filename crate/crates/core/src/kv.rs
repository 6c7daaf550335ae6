//! Self-describing `key=value` records.
//!
//! A record is a single line of space-separated pairs. Keys are
//! `[A-Za-z0-9_.]+`; values are percent-escaped so they never contain a
//! space, `=`, `%`, or a line break. Numbers are written with Rust's
//! shortest round-trip formatting, so `f64` values survive exactly.

use std::fmt::{self, Write as _};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KvError {
    Malformed(String),
    Missing(String),
    Invalid { key: String, value: String },
    Duplicate(String),
}

impl fmt::Display for KvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KvError::Malformed(tok) => write!(f, "malformed pair `{tok}`"),
            KvError::Missing(key) => write!(f, "missing key `{key}`"),
            KvError::Invalid { key, value } => write!(f, "invalid value `{value}` for `{key}`"),
            KvError::Duplicate(key) => write!(f, "duplicate key `{key}`"),
        }
    }
}

impl std::error::Error for KvError {}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'.')
}

fn escape_into(out: &mut String, value: &str) {
    for c in value.chars() {
        match c {
            ' ' => out.push_str("%20"),
            '=' => out.push_str("%3D"),
            '%' => out.push_str("%25"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            '\t' => out.push_str("%09"),
            c => out.push(c),
        }
    }
}

fn unescape(raw: &str) -> Option<String> {
    let bytes = raw.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = raw.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

/// Builder for one record.
#[derive(Debug, Default, Clone)]
pub struct KvWriter {
    line: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        debug_assert!(valid_key(key), "bad key {key}");
        if !self.line.is_empty() {
            self.line.push(' ');
        }
        self.line.push_str(key);
        self.line.push('=');
        let mut raw = String::new();
        write!(raw, "{value}").expect("writing to a String");
        escape_into(&mut self.line, &raw);
        self
    }

    pub fn put_bool(&mut self, key: &str, value: bool) -> &mut Self {
        self.put(key, u8::from(value))
    }

    pub fn finish(self) -> String {
        self.line
    }
}

/// A parsed record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KvRecord {
    pairs: Vec<(String, String)>,
}

impl KvRecord {
    pub fn parse(line: &str) -> Result<Self, KvError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for token in line.split(' ').filter(|t| !t.is_empty()) {
            let (key, raw) = token
                .split_once('=')
                .ok_or_else(|| KvError::Malformed(token.to_owned()))?;
            if !valid_key(key) {
                return Err(KvError::Malformed(token.to_owned()));
            }
            let value = unescape(raw).ok_or_else(|| KvError::Malformed(token.to_owned()))?;
            if pairs.iter().any(|(k, _)| k == key) {
                return Err(KvError::Duplicate(key.to_owned()));
            }
            pairs.push((key.to_owned(), value));
        }
        Ok(Self { pairs })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn str(&self, key: &str) -> Result<&str, KvError> {
        self.raw(key).ok_or_else(|| KvError::Missing(key.to_owned()))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, KvError> {
        let value = self.str(key)?;
        value.parse().map_err(|_| KvError::Invalid {
            key: key.to_owned(),
            value: value.to_owned(),
        })
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, KvError> {
        match self.raw(key) {
            None => Ok(None),
            Some(_) => self.get(key).map(Some),
        }
    }

    pub fn finite(&self, key: &str) -> Result<f64, KvError> {
        let v: f64 = self.get(key)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(KvError::Invalid {
                key: key.to_owned(),
                value: v.to_string(),
            })
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, KvError> {
        match self.str(key)? {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(KvError::Invalid {
                key: key.to_owned(),
                value: other.to_owned(),
            }),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(k, _)| k.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_with_separators_survive() {
        let mut w = KvWriter::new();
        w.put("operator", "night shift = 100% on\nduty")
            .put("x", 0.1 + 0.2)
            .put_bool("hms", true);
        let line = w.finish();
        assert!(!line.contains('\n'));
        let rec = KvRecord::parse(&line).unwrap();
        assert_eq!(rec.str("operator").unwrap(), "night shift = 100% on\nduty");
        assert_eq!(rec.get::<f64>("x").unwrap(), 0.1 + 0.2);
        assert!(rec.flag("hms").unwrap());
    }

    #[test]
    fn rejects_garbage() {
        assert!(KvRecord::parse("novalue").is_err());
        assert!(KvRecord::parse("a=1 a=2").is_err());
        assert!(KvRecord::parse("a=%zz").is_err());
        assert!(KvRecord::parse("a=%4").is_err());
        assert!(KvRecord::parse("bad-key=1").is_err());
        let rec = KvRecord::parse("x=inf").unwrap();
        assert!(rec.finite("x").is_err());
        assert!(matches!(rec.str("y"), Err(KvError::Missing(_))));
    }
}
