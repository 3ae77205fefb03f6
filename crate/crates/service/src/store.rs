//! Append-only JSON-lines journal, one file per case.
//!
//! The first line records the created case and every later line one
//! observation. Loading replays the journal. Operations on one case hold
//! that case's lock; distinct cases proceed in parallel.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use midas_core::case::{Case, CaseInput, HistoryEntry};
use midas_core::schema::StateSchema;
use midas_core::CoreError;
use serde::{Deserialize, Serialize};

use crate::{Result, ServiceError};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Created { case: Case },
    Observation { entry: HistoryEntry },
}

pub struct Store {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn write_line(file: &mut File, event: &Event) -> Result<()> {
    let mut line = serde_json::to_vec(event).map_err(CoreError::from)?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.sync_data()?;
    Ok(())
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, locks: Mutex::new(HashMap::new()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        self.locks.lock().expect("lock table").entry(id.to_string()).or_default().clone()
    }

    /// Persists a new case under a fresh random id.
    pub fn create(&self, input: CaseInput) -> Result<Case> {
        loop {
            let id = format!("{:016x}", rand::random::<u64>());
            let case = Case::new(id.clone(), input.clone())?;
            let lock = self.lock(&id);
            let _guard = lock.lock().expect("case lock");
            match OpenOptions::new().write(true).create_new(true).open(self.path(&id)) {
                Ok(mut file) => {
                    write_line(&mut file, &Event::Created { case: case.clone() })?;
                    return Ok(case);
                }
                Err(e) if e.kind() == ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e.into()),
            }
        }
    }

    fn replay(&self, id: &str) -> Result<Case> {
        if !valid_id(id) {
            return Err(ServiceError::NotFound(id.to_string()));
        }
        let file = match File::open(self.path(id)) {
            Ok(f) => f,
            Err(e) if e.kind() == ErrorKind::NotFound => return Err(ServiceError::NotFound(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        let mut case: Option<Case> = None;
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event: Event = serde_json::from_str(&line).map_err(CoreError::from)?;
            case = Some(match (event, case) {
                (Event::Created { case }, None) => case,
                (Event::Observation { entry }, Some(c)) => {
                    let mut next = c;
                    next.history.push(entry);
                    next.version += 1;
                    next
                }
                _ => return Err(std::io::Error::new(ErrorKind::InvalidData, format!("malformed journal for case {id}")).into()),
            });
        }
        case.ok_or_else(|| std::io::Error::new(ErrorKind::InvalidData, format!("empty journal for case {id}")).into())
    }

    /// Runs `f` on the current state of case `id` while holding its lock.
    pub fn with_case<T>(&self, id: &str, f: impl FnOnce(&Case) -> Result<T>) -> Result<T> {
        let lock = self.lock(id);
        let _guard = lock.lock().expect("case lock");
        f(&self.replay(id)?)
    }

    /// Validates `entry` against the case and appends it to the journal.
    pub fn append_observation(&self, id: &str, entry: HistoryEntry, schema: &StateSchema) -> Result<Case> {
        let lock = self.lock(id);
        let _guard = lock.lock().expect("case lock");
        let case = self.replay(id)?;
        let next = case.record_observation(entry.clone(), schema)?;
        let mut file = OpenOptions::new().append(true).open(self.path(id))?;
        write_line(&mut file, &Event::Observation { entry })?;
        Ok(next)
    }
}
