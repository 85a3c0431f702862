//! `.mtrace.gz` trace batches and the per-user record store.
//!
//! A batch is gzip-compressed UTF-8 text, one JSON object per `\n`-terminated
//! line. The first line is a header naming the user and the batch interval;
//! every following line is a WiFi scan or a GPS fix:
//!
//! ```text
//! {"k":"h","user":"u01","start":1596240000,"end":1596261600}
//! {"t":1596240000,"k":"w","ap":[["0a:1b:2c:3d:4e:5f",-61],["0a:1b:2c:3d:4e:60",-74]]}
//! {"t":1596240030,"k":"g","lat":1.345,"lon":103.953,"acc":12.0}
//! ```

mod store;

use std::io::{Read, Write};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_scan, Config, GpsPoint, RawScan, ScanResult};

pub use store::{write_atomic, Store, StoreError};

/// File extension of encoded batches.
pub const BATCH_EXTENSION: &str = "mtrace.gz";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RecordKind {
    Scan,
    Fix,
}

impl RecordKind {
    pub fn code(self) -> &'static str {
        match self {
            RecordKind::Scan => "w",
            RecordKind::Fix => "g",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Record {
    Scan(ScanResult),
    Fix(GpsPoint),
}

impl Record {
    pub fn timestamp(&self) -> i64 {
        match self {
            Record::Scan(s) => s.timestamp(),
            Record::Fix(f) => f.timestamp,
        }
    }

    pub fn kind(&self) -> RecordKind {
        match self {
            Record::Scan(_) => RecordKind::Scan,
            Record::Fix(_) => RecordKind::Fix,
        }
    }

    /// Deduplication key within one user's partition.
    pub fn key(&self) -> (i64, RecordKind) {
        (self.timestamp(), self.kind())
    }

    /// The record as one line of text, without the terminator.
    pub fn to_line(&self) -> String {
        let line = match self {
            Record::Scan(s) => serde_json::to_string(&ScanLine {
                t: s.timestamp(),
                k: "w",
                ap: s.observations().iter().map(|o| (o.mac.to_string(), o.rss)).collect(),
            }),
            Record::Fix(f) => serde_json::to_string(&FixLine { t: f.timestamp, k: "g", lat: f.lat, lon: f.lon, acc: f.accuracy }),
        };
        line.expect("record lines always serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, String> {
        match parse_line(line)? {
            Line::Record(r) => Ok(r),
            Line::Header { .. } => Err("unexpected header line".into()),
        }
    }
}

#[derive(Serialize)]
struct ScanLine<'a> {
    t: i64,
    k: &'a str,
    ap: Vec<(String, i16)>,
}

#[derive(Serialize)]
struct FixLine<'a> {
    t: i64,
    k: &'a str,
    lat: f64,
    lon: f64,
    acc: f64,
}

#[derive(Serialize)]
struct HeaderLine<'a> {
    k: &'a str,
    user: &'a str,
    start: i64,
    end: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireLine {
    k: String,
    t: Option<i64>,
    ap: Option<Vec<(String, i64)>>,
    lat: Option<f64>,
    lon: Option<f64>,
    acc: Option<f64>,
    user: Option<String>,
    start: Option<i64>,
    end: Option<i64>,
}

enum Line {
    Header { user: String, start: i64, end: i64 },
    Record(Record),
}

fn parse_line(text: &str) -> Result<Line, String> {
    let w: WireLine = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let field = |name: &str| format!("missing field `{name}`");
    match w.k.as_str() {
        "h" => {
            if w.t.is_some() || w.ap.is_some() || w.lat.is_some() || w.lon.is_some() || w.acc.is_some() {
                return Err("header carries record fields".into());
            }
            Ok(Line::Header {
                user: w.user.ok_or_else(|| field("user"))?,
                start: w.start.ok_or_else(|| field("start"))?,
                end: w.end.ok_or_else(|| field("end"))?,
            })
        }
        "w" => {
            if w.lat.is_some() || w.lon.is_some() || w.acc.is_some() || w.user.is_some() || w.start.is_some() || w.end.is_some() {
                return Err("scan line carries foreign fields".into());
            }
            let raw = RawScan { t: Some(w.t.ok_or_else(|| field("t"))?), ap: w.ap.ok_or_else(|| field("ap"))? };
            validate_scan(&raw).map(|s| Line::Record(Record::Scan(s))).map_err(|e| e.to_string())
        }
        "g" => {
            if w.ap.is_some() || w.user.is_some() || w.start.is_some() || w.end.is_some() {
                return Err("fix line carries foreign fields".into());
            }
            let fix = GpsPoint::new(
                w.lat.ok_or_else(|| field("lat"))?,
                w.lon.ok_or_else(|| field("lon"))?,
                w.acc.ok_or_else(|| field("acc"))?,
                w.t.ok_or_else(|| field("t"))?,
            )
            .map_err(|e| e.to_string())?;
            Ok(Line::Record(Record::Fix(fix)))
        }
        other => Err(format!("unknown record kind {other:?}")),
    }
}

/// One upload: a user's records over a closed interval, in time order.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub user_id: String,
    pub start: i64,
    pub end: i64,
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct SchemaViolation {
    /// 1-based line number in the decompressed text.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("corrupt stream: {0}")]
    CorruptStream(String),
    #[error("schema violation at {0}")]
    SchemaViolation(SchemaViolation),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl IngestError {
    fn schema(line: usize, reason: impl Into<String>) -> Self {
        IngestError::SchemaViolation(SchemaViolation { line, reason: reason.into() })
    }
}

impl Batch {
    pub fn new(user_id: impl Into<String>, start: i64, end: i64, records: Vec<Record>) -> Self {
        Self { user_id: user_id.into(), start, end, records }
    }

    pub fn duration_s(&self) -> i64 {
        self.end - self.start
    }

    /// Checks the interval, record times and ordering. Record positions in
    /// the returned violation are 1-based line numbers of the encoded form.
    pub fn validate(&self) -> Result<(), SchemaViolation> {
        let violation = |line, reason: String| Err(SchemaViolation { line, reason });
        if self.end < self.start {
            return violation(1, format!("interval end {} before start {}", self.end, self.start));
        }
        if !store::valid_user_id(&self.user_id) {
            return violation(1, format!("invalid user id {:?}", self.user_id));
        }
        let mut previous = self.start;
        for (k, r) in self.records.iter().enumerate() {
            let t = r.timestamp();
            if !(self.start..=self.end).contains(&t) {
                return violation(k + 2, format!("timestamp {t} outside batch interval"));
            }
            if t < previous {
                return violation(k + 2, format!("timestamp {t} earlier than preceding record"));
            }
            previous = t;
        }
        Ok(())
    }

    /// Decompressed text form: header plus one line per record.
    pub fn to_text(&self) -> String {
        let header = HeaderLine { k: "h", user: &self.user_id, start: self.start, end: self.end };
        let mut text = serde_json::to_string(&header).expect("header serializes");
        text.push('\n');
        for r in &self.records {
            text.push_str(&r.to_line());
            text.push('\n');
        }
        text
    }
}

/// Gzip-compresses the text form of a batch.
pub fn encode_batch(batch: &Batch) -> Vec<u8> {
    let mut enc = GzEncoder::new(Vec::new(), Compression::best());
    enc.write_all(batch.to_text().as_bytes()).expect("writing to memory cannot fail");
    enc.finish().expect("writing to memory cannot fail")
}

fn inflate(stream: &[u8]) -> Result<String, IngestError> {
    let mut text = String::new();
    GzDecoder::new(stream)
        .read_to_string(&mut text)
        .map_err(|e| IngestError::CorruptStream(e.to_string()))?;
    Ok(text)
}

fn lines(text: &str) -> Result<Vec<&str>, IngestError> {
    let Some(body) = text.strip_suffix('\n') else {
        return if text.is_empty() {
            Err(IngestError::schema(1, "missing header"))
        } else {
            Err(IngestError::CorruptStream("last line not newline-terminated".into()))
        };
    };
    Ok(body.split('\n').collect())
}

fn header_of(first: &str) -> Result<(String, i64, i64), IngestError> {
    match parse_line(first) {
        Ok(Line::Header { user, start, end }) => Ok((user, start, end)),
        Ok(Line::Record(_)) => Err(IngestError::schema(1, "first line must be a header")),
        Err(reason) => Err(IngestError::schema(1, reason)),
    }
}

/// Strict decode: any bad line fails the whole batch.
pub fn decode_batch(stream: &[u8]) -> Result<Batch, IngestError> {
    let text = inflate(stream)?;
    let lines = lines(&text)?;
    let (user, start, end) = header_of(lines[0])?;
    let mut records = Vec::with_capacity(lines.len() - 1);
    for (k, line) in lines.iter().enumerate().skip(1) {
        match parse_line(line) {
            Ok(Line::Record(r)) => records.push(r),
            Ok(Line::Header { .. }) => return Err(IngestError::schema(k + 1, "repeated header")),
            Err(reason) => return Err(IngestError::schema(k + 1, reason)),
        }
    }
    let batch = Batch::new(user, start, end, records);
    batch.validate().map_err(IngestError::SchemaViolation)?;
    Ok(batch)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestReport {
    pub user_id: String,
    /// Records appended to the store by this call.
    pub accepted: usize,
    /// Valid records already present (in the store or earlier in the batch).
    pub duplicates: usize,
    pub rejects: Vec<SchemaViolation>,
}

impl IngestReport {
    pub fn lines_read(&self) -> usize {
        self.accepted + self.duplicates + self.rejects.len()
    }
}

/// Lenient ingest: bad record lines are rejected individually with their
/// line number, everything else is appended to the user's partition. A
/// stream that does not inflate or whose header is unusable fails whole.
pub fn ingest_batch(store: &Store, stream: &[u8], cfg: &Config) -> Result<IngestReport, IngestError> {
    let text = inflate(stream)?;
    let lines = lines(&text)?;
    let (user, start, end) = header_of(lines[0])?;
    if !store::valid_user_id(&user) {
        return Err(IngestError::schema(1, format!("invalid user id {user:?}")));
    }
    if end < start || end - start > cfg.max_batch_hours * 3600 {
        return Err(IngestError::schema(1, format!("interval [{start}, {end}] longer than {} h or reversed", cfg.max_batch_hours)));
    }
    let mut rejects = Vec::new();
    let mut records = Vec::new();
    for (k, line) in lines.iter().enumerate().skip(1) {
        let reject = |reason: String| SchemaViolation { line: k + 1, reason };
        match parse_line(line) {
            Ok(Line::Record(r)) if (start..=end).contains(&r.timestamp()) => records.push(r),
            Ok(Line::Record(r)) => rejects.push(reject(format!("timestamp {} outside batch interval", r.timestamp()))),
            Ok(Line::Header { .. }) => rejects.push(reject("repeated header".into())),
            Err(reason) => rejects.push(reject(reason)),
        }
    }
    let valid = records.len();
    let accepted = store.append(&user, records)?;
    Ok(IngestReport { user_id: user, accepted, duplicates: valid - accepted, rejects })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ApObservation, MacAddr};

    fn scan(t: i64) -> Record {
        Record::Scan(
            ScanResult::new(t, (0..3).map(|k| ApObservation { mac: MacAddr::from_u64(0xa0 + k).unwrap(), rss: -50 - k as i16 }))
                .unwrap(),
        )
    }

    fn fix(t: i64) -> Record {
        Record::Fix(GpsPoint::new(1.345, 103.953, 12.5, t).unwrap())
    }

    fn gz(text: &str) -> Vec<u8> {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(text.as_bytes()).unwrap();
        enc.finish().unwrap()
    }

    #[test]
    fn line_format() {
        assert_eq!(scan(5).to_line(), r#"{"t":5,"k":"w","ap":[["00:00:00:00:00:a0",-50],["00:00:00:00:00:a1",-51],["00:00:00:00:00:a2",-52]]}"#);
        assert_eq!(fix(7).to_line(), r#"{"t":7,"k":"g","lat":1.345,"lon":103.953,"acc":12.5}"#);
        let b = Batch::new("u1", 0, 10, vec![]);
        assert_eq!(b.to_text(), "{\"k\":\"h\",\"user\":\"u1\",\"start\":0,\"end\":10}\n");
    }

    #[test]
    fn empty_and_mixed_round_trip() {
        for b in [Batch::new("u", 0, 21600, vec![]), Batch::new("u", 0, 21600, vec![scan(0), fix(0), fix(30), scan(300)])] {
            let bytes = encode_batch(&b);
            let back = decode_batch(&bytes).unwrap();
            assert_eq!(back, b);
            assert_eq!(encode_batch(&back), bytes);
        }
    }

    #[test]
    fn corrupt_and_schema_errors() {
        assert!(matches!(decode_batch(b"not gzip"), Err(IngestError::CorruptStream(_))));
        let mut bytes = encode_batch(&Batch::new("u", 0, 100, vec![scan(1)]));
        bytes.truncate(bytes.len() - 6);
        assert!(matches!(decode_batch(&bytes), Err(IngestError::CorruptStream(_))));

        let text = "{\"k\":\"h\",\"user\":\"u\",\"start\":0,\"end\":100}\n{\"t\":1,\"k\":\"w\",\"ap\":[[\"zz\",-50]]}\n";
        match decode_batch(&gz(text)) {
            Err(IngestError::SchemaViolation(v)) => assert_eq!(v.line, 2),
            other => panic!("{other:?}"),
        }
        let late = Batch::new("u", 0, 100, vec![scan(101)]);
        match decode_batch(&encode_batch(&late)) {
            Err(IngestError::SchemaViolation(v)) => assert_eq!(v.line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(decode_batch(&gz(&scan(1).to_line())), Err(IngestError::CorruptStream(_))));
        assert!(matches!(decode_batch(&gz("")), Err(IngestError::SchemaViolation(_))));
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(Record::from_line(r#"{"t":1,"k":"g","lat":1,"lon":2,"acc":3,"x":1}"#).is_err());
        assert!(Record::from_line(r#"{"t":1,"k":"g","lat":1,"lon":2,"acc":3,"ap":[]}"#).is_err());
        assert!(Record::from_line(r#"{"t":1,"k":"g","lat":1,"lon":2,"acc":3}"#).is_ok());
        assert!(Record::from_line(r#"{"t":1,"k":"q"}"#).is_err());
    }
}
