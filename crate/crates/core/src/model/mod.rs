//! Domain types shared by every pipeline stage.
//!
//! Naming follows the roles of the quantities rather than their usual
//! one-letter symbols. Where the literature overloads a symbol the alias is
//! noted on the field that carries it:
//!
//! * a single scan result is [`ScanResult`]; its AP count is
//!   [`ScanResult::ap_count`].
//! * the list of scan results is [`ScanList`]; its length (written with the
//!   same letter as a MAC address in the source notation) is
//!   [`ScanList::len`].
//! * a fingerprint with its distinct MAC count is [`Fingerprint`] /
//!   [`Fingerprint::ap_count`]. The common-MAC count between two fingerprints
//!   is computed in [`crate::similarity`].

mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use config::{Config, ConfigError};

/// Weakest reading accepted by [`validate_scan`].
pub const MIN_RSS_DBM: i32 = -120;

/// 48-bit access point identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MacAddr(u64);

impl MacAddr {
    pub const MAX: u64 = (1 << 48) - 1;

    pub fn from_u64(raw: u64) -> Option<Self> {
        (raw <= Self::MAX).then_some(Self(raw))
    }

    pub fn as_u64(self) -> u64 {
        self.0
    }
}

/// Lowercase colon-separated, as Android reports BSSIDs.
impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0.to_be_bytes();
        write!(f, "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}", b[2], b[3], b[4], b[5], b[6], b[7])
    }
}

impl fmt::Debug for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MacAddr({self})")
    }
}

impl FromStr for MacAddr {
    type Err = ScanRejection;

    /// Accepts `aabbccddeeff` as well as `:`/`-` separated forms, any case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hex: String = s.chars().filter(|c| *c != ':' && *c != '-').collect();
        if hex.len() != 12 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(ScanRejection::MalformedMac(s.to_string()));
        }
        u64::from_str_radix(&hex, 16)
            .map(MacAddr)
            .map_err(|_| ScanRejection::MalformedMac(s.to_string()))
    }
}

impl Serialize for MacAddr {
    fn serialize<Ser: serde::Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MacAddr {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One access point seen in one scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ApObservation {
    pub mac: MacAddr,
    /// Integer dBm, always negative.
    pub rss: i16,
}

/// Why a candidate scan record was refused.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanRejection {
    #[error("malformed MAC address {0:?}")]
    MalformedMac(String),
    #[error("rss {rss} dBm for {mac} outside [-120, 0)")]
    OutOfRangeRss { mac: String, rss: i64 },
    #[error("scan has no timestamp")]
    MissingTimestamp,
}

/// Unvalidated scan as it appears on the wire: `t` plus `[mac, rss]` pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RawScan {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<i64>,
    #[serde(default)]
    pub ap: Vec<(String, i64)>,
}

/// Normalizes a raw scan: MACs lowercased, duplicates collapsed to the
/// strongest reading, observations sorted by MAC.
pub fn validate_scan(raw: &RawScan) -> Result<ScanResult, ScanRejection> {
    let timestamp = raw.t.ok_or(ScanRejection::MissingTimestamp)?;
    let mut strongest: BTreeMap<MacAddr, i16> = BTreeMap::new();
    for (mac_text, rss) in &raw.ap {
        let mac: MacAddr = mac_text.parse()?;
        if *rss >= 0 || *rss < i64::from(MIN_RSS_DBM) {
            return Err(ScanRejection::OutOfRangeRss { mac: mac_text.clone(), rss: *rss });
        }
        let rss = *rss as i16;
        strongest
            .entry(mac)
            .and_modify(|kept| *kept = (*kept).max(rss))
            .or_insert(rss);
    }
    Ok(ScanResult {
        timestamp,
        observations: strongest.into_iter().map(|(mac, rss)| ApObservation { mac, rss }).collect(),
    })
}

/// A view over MAC-keyed RSS values, iterated in ascending MAC order.
///
/// Both single scans and aggregated fingerprints are compared with the same
/// cosine rule, so the similarity code is written against this trait.
pub trait RssVector<S: Scalar> {
    /// Number of distinct MACs.
    fn ap_count(&self) -> usize;
    /// `(mac, rss)` pairs sorted by MAC, no duplicates.
    fn rss_entries(&self) -> impl Iterator<Item = (MacAddr, S)> + '_;
}

/// One WiFi scan: the APs heard at `timestamp`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawScan", into = "RawScan")]
pub struct ScanResult {
    timestamp: i64,
    observations: Vec<ApObservation>,
}

impl ScanResult {
    /// Builds a scan from already-typed observations (duplicates keep the
    /// strongest reading). Out-of-range RSS values are rejected.
    pub fn new(
        timestamp: i64,
        observations: impl IntoIterator<Item = ApObservation>,
    ) -> Result<Self, ScanRejection> {
        let raw = RawScan {
            t: Some(timestamp),
            ap: observations
                .into_iter()
                .map(|o| (o.mac.to_string(), i64::from(o.rss)))
                .collect(),
        };
        validate_scan(&raw)
    }

    pub fn timestamp(&self) -> i64 {
        self.timestamp
    }

    pub fn observations(&self) -> &[ApObservation] {
        &self.observations
    }

    pub fn ap_count(&self) -> usize {
        self.observations.len()
    }

    pub fn rss_of(&self, mac: MacAddr) -> Option<i16> {
        self.observations
            .binary_search_by_key(&mac, |o| o.mac)
            .ok()
            .map(|i| self.observations[i].rss)
    }

    pub fn to_raw(&self) -> RawScan {
        RawScan::from(self.clone())
    }
}

impl TryFrom<RawScan> for ScanResult {
    type Error = ScanRejection;

    fn try_from(raw: RawScan) -> Result<Self, Self::Error> {
        validate_scan(&raw)
    }
}

impl From<ScanResult> for RawScan {
    fn from(scan: ScanResult) -> Self {
        RawScan {
            t: Some(scan.timestamp),
            ap: scan
                .observations
                .iter()
                .map(|o| (o.mac.to_string(), i64::from(o.rss)))
                .collect(),
        }
    }
}

impl<S: Scalar> RssVector<S> for ScanResult {
    fn ap_count(&self) -> usize {
        self.observations.len()
    }

    fn rss_entries(&self) -> impl Iterator<Item = (MacAddr, S)> + '_ {
        self.observations.iter().map(|o| (o.mac, S::from_dbm(o.rss)))
    }
}

/// Time-ordered scans of one user.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanList {
    user_id: String,
    scans: Vec<ScanResult>,
}

impl ScanList {
    /// Sorts `scans` by timestamp (stable, so equal timestamps keep their
    /// input order).
    pub fn new(user_id: impl Into<String>, mut scans: Vec<ScanResult>) -> Self {
        scans.sort_by_key(|s| s.timestamp);
        Self { user_id: user_id.into(), scans }
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn scans(&self) -> &[ScanResult] {
        &self.scans
    }

    pub fn len(&self) -> usize {
        self.scans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scans.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&ScanResult> {
        self.scans.get(index)
    }

    /// Indices of scans with `start <= t <= end`.
    pub fn indices_within(&self, start: i64, end: i64) -> impl Iterator<Item = usize> + '_ {
        let lo = self.scans.partition_point(|s| s.timestamp < start);
        let hi = self.scans.partition_point(|s| s.timestamp <= end);
        lo..hi.max(lo)
    }

    /// New list holding the scans at `indices`, in the order given.
    pub fn select(&self, indices: &[usize]) -> ScanList {
        ScanList {
            user_id: self.user_id.clone(),
            scans: indices.iter().map(|&i| self.scans[i].clone()).collect(),
        }
    }
}

impl std::ops::Index<usize> for ScanList {
    type Output = ScanResult;

    fn index(&self, index: usize) -> &ScanResult {
        &self.scans[index]
    }
}

/// MAC-keyed mean RSS of a place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint<S: Scalar> {
    entries: Vec<(MacAddr, S)>,
}

impl<S: Scalar> Fingerprint<S> {
    /// Entries are sorted by MAC; a repeated MAC keeps its last value.
    pub fn from_entries(entries: impl IntoIterator<Item = (MacAddr, S)>) -> Self {
        let map: BTreeMap<MacAddr, S> = entries.into_iter().collect();
        Self { entries: map.into_iter().collect() }
    }

    pub fn from_scan(scan: &ScanResult) -> Self {
        Self { entries: scan.rss_entries().collect() }
    }

    pub fn entries(&self) -> &[(MacAddr, S)] {
        &self.entries
    }

    /// Distinct MAC count.
    pub fn ap_count(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rss_of(&self, mac: MacAddr) -> Option<S> {
        self.entries
            .binary_search_by_key(&mac, |(m, _)| *m)
            .ok()
            .map(|i| self.entries[i].1)
    }
}

impl<S: Scalar> RssVector<S> for Fingerprint<S> {
    fn ap_count(&self) -> usize {
        self.entries.len()
    }

    fn rss_entries(&self) -> impl Iterator<Item = (MacAddr, S)> + '_ {
        self.entries.iter().copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite() && self.lon.is_finite() && self.lat.abs() <= 90.0 && self.lon.abs() <= 180.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpsRejection {
    #[error("coordinate ({lat}, {lon}) outside WGS84 bounds")]
    OutOfBounds { lat: f64, lon: f64 },
    #[error("accuracy {0} m must be positive and finite")]
    BadAccuracy(f64),
}

/// One GPS fix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpsPoint {
    pub lat: f64,
    pub lon: f64,
    /// Reported horizontal accuracy radius in meters.
    pub accuracy: f64,
    pub timestamp: i64,
}

impl GpsPoint {
    pub fn new(lat: f64, lon: f64, accuracy: f64, timestamp: i64) -> Result<Self, GpsRejection> {
        let point = Self { lat, lon, accuracy, timestamp };
        point.validate()?;
        Ok(point)
    }

    pub fn validate(&self) -> Result<(), GpsRejection> {
        if !self.position().is_valid() {
            return Err(GpsRejection::OutOfBounds { lat: self.lat, lon: self.lon });
        }
        if !(self.accuracy.is_finite() && self.accuracy > 0.0) {
            return Err(GpsRejection::BadAccuracy(self.accuracy));
        }
        Ok(())
    }

    pub fn position(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StaySource {
    Gps,
    Wifi,
    Fused,
}

impl fmt::Display for StaySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StaySource::Gps => "gps",
            StaySource::Wifi => "wifi",
            StaySource::Fused => "fused",
        })
    }
}

/// A dwell at one place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StayPoint {
    /// `None` for WiFi-only places that could not be tied to a usable fix.
    pub centroid: Option<LatLon>,
    pub arrive: i64,
    pub depart: i64,
    pub source: StaySource,
    pub label: Option<String>,
}

impl StayPoint {
    pub fn dwell(&self) -> i64 {
        self.depart - self.arrive
    }

    pub fn contains(&self, t: i64) -> bool {
        self.arrive <= t && t <= self.depart
    }
}

/// Contiguous presence at a WiFi place.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    pub arrive: i64,
    pub depart: i64,
}

impl Visit {
    pub fn dwell(&self) -> i64 {
        self.depart - self.arrive
    }

    pub fn contains(&self, t: i64) -> bool {
        self.arrive <= t && t <= self.depart
    }
}

/// Indoor place recovered by WiFi clustering inside one GPS stay region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoiCluster<S: Scalar> {
    /// Discovery order within the parent stay region, starting at 0.
    pub poi_id: u32,
    /// Ascending indices into the clustered [`ScanList`].
    pub member_indices: Vec<usize>,
    pub fingerprint: Fingerprint<S>,
    pub visits: Vec<Visit>,
}

impl<S: Scalar> PoiCluster<S> {
    /// Two-digit, one-based display label: poi 0 prints as `"01"`.
    pub fn label(&self) -> String {
        poi_label(self.poi_id)
    }

    pub fn total_dwell(&self) -> i64 {
        self.visits.iter().map(Visit::dwell).sum()
    }

    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }
}

pub fn poi_label(poi_id: u32) -> String {
    format!("{:02}", poi_id + 1)
}
