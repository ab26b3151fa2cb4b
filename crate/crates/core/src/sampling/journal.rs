//! Append-only session journals.
//!
//! One JSONL file per session, one line per event:
//! `{"event":"drawn","payload":{"id":"wos:00012"},"ts":"..."}`.
//! Every change is applied to a copy, appended and flushed, then committed
//! in memory, so a crash loses at most the event being written. A torn last
//! line is dropped on load; a bad line anywhere else is an error.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::Utc;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::{Corpus, RefId};

use super::session::{Advance, ReviewSession, SessionError, SessionKind, SessionMeta, SessionState, Verdict};

const LOCK_FILE: &str = ".lock";

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("session store {dir} is locked by {holder}")]
    LockHeld { dir: String, holder: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path} line {line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
    #[error("no session {0}")]
    Unknown(String),
    #[error("session {0} already exists")]
    Exists(String),
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JournalLine {
    event: String,
    payload: Value,
    ts: String,
}

fn apply(session: &mut Option<ReviewSession>, line: &JournalLine) -> Result<(), String> {
    let field_id = || -> Result<RefId, String> {
        line.payload
            .get("id")
            .and_then(Value::as_str)
            .map(RefId::new)
            .ok_or_else(|| "payload lacks id".to_string())
    };
    match (line.event.as_str(), session.as_mut()) {
        ("created", None) => {
            let meta: SessionMeta =
                serde_json::from_value(line.payload.clone()).map_err(|e| e.to_string())?;
            *session = Some(ReviewSession::from_meta(meta));
        }
        ("created", Some(_)) => return Err("second created event".into()),
        (_, None) => return Err("event before created".into()),
        ("drawn", Some(s)) => s.apply_draw(field_id()?),
        ("verdict", Some(s)) => {
            let verdict: Verdict = serde_json::from_value(
                line.payload.get("verdict").cloned().unwrap_or(Value::Null),
            )
            .map_err(|e| e.to_string())?;
            s.record_verdict(&field_id()?, verdict)
                .map_err(|e| e.to_string())?;
        }
        ("exhausted", Some(s)) => s.mark_exhausted(),
        (other, _) => return Err(format!("unknown event {other:?}")),
    }
    Ok(())
}

fn line(event: &str, payload: Value) -> JournalLine {
    JournalLine {
        event: event.to_string(),
        payload,
        ts: Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
    }
}

/// Replays a journal. Returns the session and the byte length of the valid
/// prefix, which is shorter than the file only when the last line is torn.
fn replay(path: &Path, text: &str) -> Result<(ReviewSession, usize), JournalError> {
    let corrupt = |line: usize, message: String| JournalError::Corrupt {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut session = None;
    let mut valid = 0;
    let mut offset = 0;
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    for (i, raw) in lines.iter().enumerate() {
        offset += raw.len();
        let is_last = i + 1 == lines.len();
        if raw.trim().is_empty() {
            valid = offset;
            continue;
        }
        match serde_json::from_str::<JournalLine>(raw.trim_end()) {
            Ok(l) => {
                apply(&mut session, &l).map_err(|m| corrupt(i + 1, m))?;
                valid = offset;
            }
            Err(_) if is_last && !raw.ends_with('\n') => break,
            Err(e) => return Err(corrupt(i + 1, e.to_string())),
        }
    }
    let session = session.ok_or_else(|| corrupt(1, "journal has no created event".into()))?;
    Ok((session, valid))
}

/// A directory of session journals, held exclusively while open.
#[derive(Debug)]
pub struct SessionStore {
    dir: PathBuf,
    sessions: BTreeMap<String, ReviewSession>,
}

impl SessionStore {
    pub fn open(dir: &Path) -> Result<Self, JournalError> {
        let io = |source| JournalError::Io {
            path: dir.display().to_string(),
            source,
        };
        fs::create_dir_all(dir).map_err(io)?;
        let lock = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                writeln!(f, "pid {}", std::process::id()).map_err(io)?;
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                let holder = fs::read_to_string(&lock)
                    .map(|s| s.trim().to_string())
                    .unwrap_or_else(|_| "an unknown process".into());
                return Err(JournalError::LockHeld {
                    dir: dir.display().to_string(),
                    holder,
                });
            }
            Err(e) => return Err(io(e)),
        }
        let mut store = Self {
            dir: dir.to_path_buf(),
            sessions: BTreeMap::new(),
        };
        // on failure `store` drops here and releases the lock
        store.load_all()?;
        Ok(store)
    }

    fn load_all(&mut self) -> Result<(), JournalError> {
        let entries = fs::read_dir(&self.dir).map_err(|source| JournalError::Io {
            path: self.dir.display().to_string(),
            source,
        })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            let io = |source| JournalError::Io {
                path: path.display().to_string(),
                source,
            };
            let text = fs::read_to_string(&path).map_err(io)?;
            let (session, valid) = replay(&path, &text)?;
            if valid < text.len() {
                let f = OpenOptions::new().write(true).open(&path).map_err(io)?;
                f.set_len(valid as u64).map_err(io)?;
            }
            self.sessions.insert(session.id().to_string(), session);
        }
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn sessions(&self) -> impl Iterator<Item = &ReviewSession> {
        self.sessions.values()
    }

    pub fn get(&self, id: &str) -> Result<&ReviewSession, JournalError> {
        self.sessions
            .get(id)
            .ok_or_else(|| JournalError::Unknown(id.to_string()))
    }

    fn path_for(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    fn append(&self, id: &str, lines: &[JournalLine]) -> Result<(), JournalError> {
        if lines.is_empty() {
            return Ok(());
        }
        let path = self.path_for(id);
        let io = |source| JournalError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut buf = String::new();
        for l in lines {
            buf.push_str(&serde_json::to_string(l).expect("journal line serializes"));
            buf.push('\n');
        }
        let mut f: File = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        f.write_all(buf.as_bytes()).map_err(io)?;
        f.sync_data().map_err(io)?;
        Ok(())
    }

    pub fn create(
        &mut self,
        id: &str,
        kind: SessionKind,
        seed: u64,
        corpus: &Corpus,
    ) -> Result<&ReviewSession, JournalError> {
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(JournalError::Unknown(format!("invalid session id {id:?}")));
        }
        if self.sessions.contains_key(id) || self.path_for(id).exists() {
            return Err(JournalError::Exists(id.to_string()));
        }
        let session = ReviewSession::new(id, kind, seed, corpus)?;
        let meta = serde_json::to_value(session.meta()).expect("meta serializes");
        self.append(id, &[line("created", meta)])?;
        self.sessions.insert(id.to_string(), session);
        Ok(&self.sessions[id])
    }

    pub fn advance(&mut self, id: &str, corpus: &Corpus) -> Result<Advance, JournalError> {
        let current = self.get(id)?;
        let mut next = current.clone();
        let outcome = next.advance(corpus);
        let mut events = Vec::new();
        if next.drawn().len() > current.drawn().len() {
            let drawn = next.drawn().last().expect("just drawn");
            events.push(line("drawn", json!({ "id": drawn })));
        }
        if next.state() == SessionState::Exhausted && current.state() != SessionState::Exhausted {
            events.push(line("exhausted", json!({})));
        }
        self.append(id, &events)?;
        self.sessions.insert(id.to_string(), next);
        Ok(outcome?)
    }

    pub fn record(&mut self, id: &str, reference: &RefId, verdict: Verdict) -> Result<&ReviewSession, JournalError> {
        let mut next = self.get(id)?.clone();
        next.record_verdict(reference, verdict.clone())?;
        let payload = json!({ "id": reference, "verdict": verdict });
        self.append(id, &[line("verdict", payload)])?;
        self.sessions.insert(id.to_string(), next);
        Ok(&self.sessions[id])
    }
}

impl Drop for SessionStore {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.dir.join(LOCK_FILE));
    }
}

/// Pool keywords as plain text, one per line, ready for an exclusion rules
/// file or the query builder.
pub fn export_pool(session: &ReviewSession) -> String {
    session.pool().iter().map(|k| format!("{k}\n")).collect()
}
