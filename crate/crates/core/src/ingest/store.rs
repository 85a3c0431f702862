//! Directory-per-user record store.
//!
//! ```text
//! <root>/<user>/index.json        sealed segments, in append order
//! <root>/<user>/seg-00000001.ndjson
//! <root>/<user>/writer.lock       present while a writer holds the partition
//! ```
//!
//! Segments and the index are written to a temporary name and renamed into
//! place, so a reader that loads the index only ever sees complete segments.

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Record, RecordKind};
use crate::gps_pipeline::GpsTrack;
use crate::model::ScanList;

const INDEX_FILE: &str = "index.json";
const LOCK_FILE: &str = "writer.lock";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("partition {0:?} is locked by another writer")]
    Locked(String),
    #[error("invalid user id {0:?}")]
    InvalidUser(String),
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("corrupt segment {path} line {line}: {reason}")]
    Corrupt { path: PathBuf, line: usize, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// User ids double as directory names.
pub(crate) fn valid_user_id(user: &str) -> bool {
    !user.is_empty()
        && user.len() <= 128
        && !user.starts_with('.')
        && user.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct Index {
    segments: Vec<SegmentMeta>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct SegmentMeta {
    file: String,
    records: usize,
    first_t: i64,
    last_t: i64,
}

struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[derive(Clone, Debug)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn partition(&self, user: &str) -> Result<PathBuf, StoreError> {
        if !valid_user_id(user) {
            return Err(StoreError::InvalidUser(user.to_string()));
        }
        Ok(self.root.join(user))
    }

    /// Users with at least one sealed segment, sorted.
    pub fn users(&self) -> Result<Vec<String>, StoreError> {
        let mut users = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io_err(&self.root))? {
            let entry = entry.map_err(io_err(&self.root))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if valid_user_id(&name) && entry.path().join(INDEX_FILE).is_file() {
                users.push(name);
            }
        }
        users.sort();
        Ok(users)
    }

    fn read_index(dir: &Path) -> Result<Index, StoreError> {
        let path = dir.join(INDEX_FILE);
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt { path, line: 1, reason: e.to_string() }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Index::default()),
            Err(e) => Err(StoreError::Io { path, source: e }),
        }
    }

    fn read_segments(dir: &Path, index: &Index) -> Result<Vec<Record>, StoreError> {
        let mut out = Vec::new();
        for seg in &index.segments {
            let path = dir.join(&seg.file);
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            for (k, line) in text.lines().enumerate() {
                let record = Record::from_line(line).map_err(|reason| StoreError::Corrupt { path: path.clone(), line: k + 1, reason })?;
                out.push(record);
            }
        }
        Ok(out)
    }

    /// All records of a user sorted by `(timestamp, kind)`.
    pub fn read_records(&self, user: &str) -> Result<Vec<Record>, StoreError> {
        let dir = self.partition(user)?;
        if !dir.join(INDEX_FILE).is_file() {
            return Err(StoreError::UnknownUser(user.to_string()));
        }
        let mut records = Self::read_segments(&dir, &Self::read_index(&dir)?)?;
        records.sort_by_key(Record::key);
        Ok(records)
    }

    /// Scans and fixes of a user with timestamps in `[start, end]`.
    pub fn load(&self, user: &str, window: Option<(i64, i64)>) -> Result<(ScanList, GpsTrack), StoreError> {
        let (mut scans, mut fixes) = (Vec::new(), Vec::new());
        for r in self.read_records(user)? {
            if window.is_some_and(|(a, b)| !(a..=b).contains(&r.timestamp())) {
                continue;
            }
            match r {
                Record::Scan(s) => scans.push(s),
                Record::Fix(f) => fixes.push(f),
            }
        }
        Ok((ScanList::new(user, scans), GpsTrack::new(user, fixes)))
    }

    /// Appends the records whose `(timestamp, kind)` key is new to the
    /// partition as one sealed segment; returns how many were appended.
    pub fn append(&self, user: &str, records: Vec<Record>) -> Result<usize, StoreError> {
        let dir = self.partition(user)?;
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let _lock = self.lock(&dir, user)?;

        let mut index = Self::read_index(&dir)?;
        let mut seen: BTreeSet<(i64, RecordKind)> = Self::read_segments(&dir, &index)?.iter().map(Record::key).collect();
        let mut fresh: Vec<Record> = records.into_iter().filter(|r| seen.insert(r.key())).collect();
        if fresh.is_empty() {
            return Ok(0);
        }
        fresh.sort_by_key(Record::key);

        let mut text = String::new();
        for r in &fresh {
            text.push_str(&r.to_line());
            text.push('\n');
        }
        let file = format!("seg-{:08}.ndjson", index.segments.len() + 1);
        let seg_path = dir.join(&file);
        write_atomic(&seg_path, text.as_bytes()).map_err(io_err(&seg_path))?;
        index.segments.push(SegmentMeta {
            file,
            records: fresh.len(),
            first_t: fresh[0].timestamp(),
            last_t: fresh[fresh.len() - 1].timestamp(),
        });
        let index_path = dir.join(INDEX_FILE);
        let body = serde_json::to_vec_pretty(&index).expect("index serializes");
        write_atomic(&index_path, &body).map_err(io_err(&index_path))?;
        Ok(fresh.len())
    }

    fn lock(&self, dir: &Path, user: &str) -> Result<LockGuard, StoreError> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(LockGuard(path)),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(StoreError::Locked(user.to_string())),
            Err(e) => Err(StoreError::Io { path, source: e }),
        }
    }
}
