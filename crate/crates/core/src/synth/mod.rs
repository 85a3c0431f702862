//! Synthetic worlds and agents: radio and GPS traces with ground truth.
//!
//! RSS follows a log-distance path loss model with a per-floor penalty.
//! Whether an AP appears in a scan is decided on the noiseless level so the
//! visible set at a fixed spot is stable; Gaussian jitter is then added to
//! the reported value.

pub mod presets;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::LocalFrame;
use crate::gps_pipeline::GpsTrack;
use crate::ingest::{encode_batch, write_atomic, Batch, Record, BATCH_EXTENSION};
use crate::model::{ApObservation, Config, GpsPoint, LatLon, MacAddr, ScanList, ScanResult, MIN_RSS_DBM};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid world: {0}")]
    World(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cover {
    #[default]
    Open,
    Sheltered,
    Indoor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessPoint {
    pub mac: MacAddr,
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub floor: i32,
    /// Level at 1 m, dBm.
    pub tx_power: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Place {
    pub label: String,
    /// Ground-truth place this is part of, e.g. two rooms of one home.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub floor: i32,
    /// Agents wander uniformly within this disk while staying.
    pub radius_m: f64,
    #[serde(default)]
    pub cover: Cover,
}

impl Place {
    pub fn truth_label(&self) -> &str {
        self.group.as_deref().unwrap_or(&self.label)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Walkway {
    pub label: String,
    /// Polyline vertices as `[lat, lon]`.
    pub points: Vec<[f64; 2]>,
    #[serde(default)]
    pub floor: i32,
    /// Covered stretches as `[from_m, to_m]` along the polyline.
    #[serde(default)]
    pub sheltered: Vec<[f64; 2]>,
}

fn default_exponent() -> f64 {
    3.0
}
fn default_floor_loss() -> f64 {
    15.0
}
fn default_floor_height() -> f64 {
    3.5
}
fn default_visibility() -> f64 {
    -95.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct World {
    pub origin: LatLon,
    #[serde(default = "default_exponent")]
    pub path_loss_exponent: f64,
    /// Attenuation per floor crossed. Lower it to model a wide opening
    /// between stacked places.
    #[serde(default = "default_floor_loss")]
    pub floor_loss_db: f64,
    #[serde(default = "default_floor_height")]
    pub floor_height_m: f64,
    /// APs whose noiseless level is below this are not reported.
    #[serde(default = "default_visibility")]
    pub visibility_dbm: f64,
    #[serde(default)]
    pub aps: Vec<AccessPoint>,
    #[serde(default)]
    pub places: Vec<Place>,
    #[serde(default)]
    pub walkways: Vec<Walkway>,
}

/// Minimum number of APs audible from every place center.
pub const MIN_APS_PER_PLACE: usize = 5;

impl World {
    pub fn new(origin: LatLon) -> Self {
        Self {
            origin,
            path_loss_exponent: default_exponent(),
            floor_loss_db: default_floor_loss(),
            floor_height_m: default_floor_height(),
            visibility_dbm: default_visibility(),
            aps: Vec::new(),
            places: Vec::new(),
            walkways: Vec::new(),
        }
    }

    pub fn place(&self, label: &str) -> Option<&Place> {
        self.places.iter().find(|p| p.label == label)
    }

    pub fn walkway(&self, label: &str) -> Option<&Walkway> {
        self.walkways.iter().find(|w| w.label == label)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let err = |m: String| Err(SynthError::World(m));
        let mut macs = BTreeSet::new();
        for ap in &self.aps {
            if !macs.insert(ap.mac) {
                return err(format!("duplicate mac {}", ap.mac));
            }
        }
        let mut labels = BTreeSet::new();
        for p in &self.places {
            if !labels.insert(p.label.as_str()) {
                return err(format!("duplicate place {:?}", p.label));
            }
            if !(p.radius_m >= 0.0) {
                return err(format!("place {:?} has negative radius", p.label));
            }
        }
        for w in &self.walkways {
            if w.points.len() < 2 {
                return err(format!("walkway {:?} needs at least two points", w.label));
            }
        }
        let radio = Radio::new(self);
        for p in &self.places {
            let (e, n) = radio.frame.to_local(LatLon::new(p.lat, p.lon));
            let audible = radio.aps.iter().filter(|ap| radio.level(ap, e, n, p.floor) >= self.visibility_dbm).count();
            if audible < MIN_APS_PER_PLACE {
                return err(format!("place {:?} hears only {audible} APs", p.label));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let world: World = toml::from_str(text)?;
        world.validate()?;
        Ok(world)
    }
}

struct LocalAp {
    mac: MacAddr,
    east: f64,
    north: f64,
    floor: i32,
    tx_power: f64,
}

struct Radio<'a> {
    world: &'a World,
    frame: LocalFrame,
    aps: Vec<LocalAp>,
}

impl<'a> Radio<'a> {
    fn new(world: &'a World) -> Self {
        let frame = LocalFrame::new(world.origin);
        let mut aps: Vec<LocalAp> = world
            .aps
            .iter()
            .map(|ap| {
                let (east, north) = frame.to_local(LatLon::new(ap.lat, ap.lon));
                LocalAp { mac: ap.mac, east, north, floor: ap.floor, tx_power: ap.tx_power }
            })
            .collect();
        aps.sort_by_key(|ap| ap.mac);
        Self { world, frame, aps }
    }

    fn level(&self, ap: &LocalAp, east: f64, north: f64, floor: i32) -> f64 {
        let floors = f64::from((ap.floor - floor).abs());
        let d = (ap.east - east).hypot(ap.north - north).hypot(floors * self.world.floor_height_m).max(1.0);
        ap.tx_power - 10.0 * self.world.path_loss_exponent * d.log10() - floors * self.world.floor_loss_db
    }

    fn scan(&self, t: i64, east: f64, north: f64, floor: i32, jitter: &Normal<f64>, rng: &mut ChaCha8Rng) -> ScanResult {
        let mut obs = Vec::new();
        for ap in &self.aps {
            let level = self.level(ap, east, north, floor);
            if level < self.world.visibility_dbm {
                continue;
            }
            let rss = (level + jitter.sample(rng)).round().clamp(f64::from(MIN_RSS_DBM), -1.0);
            obs.push(ApObservation { mac: ap.mac, rss: rss as i16 });
        }
        ScanResult::new(t, obs).expect("generated observations are in range")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverNoise {
    /// Reported accuracy drawn uniformly from `[lo, hi)`, meters.
    pub accuracy_m: [f64; 2],
    /// Standard deviation of the positional error per axis, meters.
    pub scatter_m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpsNoise {
    pub open: CoverNoise,
    pub sheltered: CoverNoise,
    pub indoor: CoverNoise,
}

impl Default for GpsNoise {
    fn default() -> Self {
        Self {
            open: CoverNoise { accuracy_m: [5.0, 15.0], scatter_m: 3.0 },
            sheltered: CoverNoise { accuracy_m: [30.0, 45.0], scatter_m: 10.0 },
            indoor: CoverNoise { accuracy_m: [30.0, 45.0], scatter_m: 12.0 },
        }
    }
}

impl GpsNoise {
    fn for_cover(&self, cover: Cover) -> CoverNoise {
        match cover {
            Cover::Open => self.open,
            Cover::Sheltered => self.sheltered,
            Cover::Indoor => self.indoor,
        }
    }
}

/// One piece of an agent's day. Times are seconds after the scenario start
/// and intervals are half-open.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Segment {
    Stay { place: String, start: i64, end: i64 },
    Walk {
        walkway: String,
        start: i64,
        end: i64,
        #[serde(default)]
        reverse: bool,
    },
    /// Straight line from where the previous segment ends to where the next
    /// one starts.
    Travel {
        start: i64,
        end: i64,
        #[serde(default)]
        cover: Cover,
    },
}

impl Segment {
    pub fn span(&self) -> (i64, i64) {
        match *self {
            Segment::Stay { start, end, .. } | Segment::Walk { start, end, .. } | Segment::Travel { start, end, .. } => (start, end),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Agent {
    pub user: String,
    /// Offset of this agent's sampling clock, seconds.
    #[serde(default)]
    pub phase_s: i64,
    pub segments: Vec<Segment>,
}

fn default_gps_interval() -> i64 {
    60
}
fn default_sigma() -> f64 {
    4.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Epoch seconds of time zero.
    pub start: i64,
    #[serde(default = "default_gps_interval")]
    pub gps_interval_s: i64,
    #[serde(default = "default_sigma")]
    pub rss_sigma_db: f64,
    #[serde(default)]
    pub gps: GpsNoise,
    pub agents: Vec<Agent>,
}

impl Scenario {
    pub fn validate(&self, world: &World) -> Result<(), SynthError> {
        let err = |m: String| Err(SynthError::Scenario(m));
        if self.gps_interval_s <= 0 {
            return err("gps_interval_s must be positive".into());
        }
        if !(self.rss_sigma_db >= 0.0) {
            return err("rss_sigma_db must be non-negative".into());
        }
        let mut users = BTreeSet::new();
        for a in &self.agents {
            if !users.insert(a.user.as_str()) {
                return err(format!("duplicate agent {:?}", a.user));
            }
            let mut previous_end = i64::MIN;
            for (k, seg) in a.segments.iter().enumerate() {
                let (s, e) = seg.span();
                if s >= e {
                    return err(format!("{}: segment {k} is empty", a.user));
                }
                if s < previous_end {
                    return err(format!("{}: segment {k} overlaps the previous one", a.user));
                }
                previous_end = e;
                match seg {
                    Segment::Stay { place, .. } if world.place(place).is_none() => {
                        return err(format!("{}: unknown place {place:?}", a.user));
                    }
                    Segment::Walk { walkway, .. } if world.walkway(walkway).is_none() => {
                        return err(format!("{}: unknown walkway {walkway:?}", a.user));
                    }
                    Segment::Travel { .. } if k == 0 || k + 1 == a.segments.len() => {
                        return err(format!("{}: travel segment {k} needs neighbours", a.user));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// A world and a scenario in one declarative document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSetup {
    pub world: World,
    pub scenario: Scenario,
}

impl SimSetup {
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let setup: SimSetup = toml::from_str(text)?;
        setup.world.validate()?;
        setup.scenario.validate(&setup.world)?;
        Ok(setup)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("setup serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanTruth {
    pub t: i64,
    /// Ground-truth place, `None` while in transit.
    pub place: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthVisit {
    pub place: String,
    pub arrive: i64,
    pub depart: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimUser {
    pub user_id: String,
    pub scans: ScanList,
    pub track: GpsTrack,
    /// Parallel to `scans`.
    pub scan_truth: Vec<ScanTruth>,
    pub visits: Vec<TruthVisit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthUser {
    pub user: String,
    pub visits: Vec<TruthVisit>,
    pub scans: Vec<ScanTruth>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub seed: u64,
    pub users: Vec<TruthUser>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub seed: u64,
    pub users: Vec<SimUser>,
}

pub const TRUTH_FILE: &str = "truth.json";

impl Simulation {
    pub fn user(&self, id: &str) -> Option<&SimUser> {
        self.users.iter().find(|u| u.user_id == id)
    }

    pub fn truth(&self) -> TruthSidecar {
        TruthSidecar {
            seed: self.seed,
            users: self
                .users
                .iter()
                .map(|u| TruthUser { user: u.user_id.clone(), visits: u.visits.clone(), scans: u.scan_truth.clone() })
                .collect(),
        }
    }

    /// Splits every user's records into consecutive batches of at most
    /// `batch_s` seconds, aligned to `origin`.
    pub fn batches(&self, origin: i64, batch_s: i64) -> Vec<Batch> {
        assert!(batch_s > 0);
        let mut out = Vec::new();
        for u in &self.users {
            let mut by_slot: BTreeMap<i64, Vec<Record>> = BTreeMap::new();
            let records = u.scans.scans().iter().cloned().map(Record::Scan).chain(u.track.points().iter().copied().map(Record::Fix));
            for r in records {
                by_slot.entry((r.timestamp() - origin).div_euclid(batch_s)).or_default().push(r);
            }
            for (slot, mut records) in by_slot {
                records.sort_by_key(Record::key);
                let start = origin + slot * batch_s;
                out.push(Batch::new(u.user_id.clone(), start, start + batch_s - 1, records));
            }
        }
        out
    }

    /// Writes `.mtrace.gz` batches and the truth sidecar into `dir`.
    pub fn write(&self, dir: &Path, origin: i64, cfg: &Config) -> Result<Vec<std::path::PathBuf>, SynthError> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for b in self.batches(origin, cfg.max_batch_hours * 3600) {
            let path = dir.join(format!("{}-{}.{BATCH_EXTENSION}", b.user_id, b.start));
            write_atomic(&path, &encode_batch(&b))?;
            paths.push(path);
        }
        let truth = serde_json::to_vec_pretty(&self.truth()).expect("truth serializes");
        write_atomic(&dir.join(TRUTH_FILE), &truth)?;
        Ok(paths)
    }
}

struct Pose {
    east: f64,
    north: f64,
    floor: i32,
    cover: Cover,
    place: Option<String>,
}

fn polyline(frame: &LocalFrame, w: &Walkway) -> Vec<(f64, f64)> {
    w.points.iter().map(|&[lat, lon]| frame.to_local(LatLon::new(lat, lon))).collect()
}

fn point_along(line: &[(f64, f64)], mut s: f64) -> (f64, f64) {
    for pair in line.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let len = (b.0 - a.0).hypot(b.1 - a.1);
        if s <= len || len == 0.0 {
            let f = if len == 0.0 { 0.0 } else { s / len };
            return (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1));
        }
        s -= len;
    }
    line[line.len() - 1]
}

fn length(line: &[(f64, f64)]) -> f64 {
    line.windows(2).map(|p| (p[1].0 - p[0].0).hypot(p[1].1 - p[0].1)).sum()
}

struct AgentSim<'a> {
    world: &'a World,
    frame: LocalFrame,
    agent: &'a Agent,
}

impl AgentSim<'_> {
    fn uniform_in_disk(rng: &mut ChaCha8Rng, radius: f64) -> (f64, f64) {
        let r = radius * rng.random::<f64>().sqrt();
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        (r * theta.cos(), r * theta.sin())
    }

    /// Position at the start (`at_end == false`) or end of a segment,
    /// ignoring within-place wander.
    fn anchor(&self, seg: &Segment, at_end: bool) -> (f64, f64) {
        match seg {
            Segment::Stay { place, .. } => {
                let p = self.world.place(place).expect("validated");
                self.frame.to_local(LatLon::new(p.lat, p.lon))
            }
            Segment::Walk { walkway, reverse, .. } => {
                let line = polyline(&self.frame, self.world.walkway(walkway).expect("validated"));
                let forward_end = at_end != *reverse;
                if forward_end {
                    line[line.len() - 1]
                } else {
                    line[0]
                }
            }
            Segment::Travel { .. } => unreachable!("travel never neighbours travel after validation"),
        }
    }

    fn anchor_floor(&self, seg: &Segment) -> i32 {
        match seg {
            Segment::Stay { place, .. } => self.world.place(place).expect("validated").floor,
            Segment::Walk { walkway, .. } => self.world.walkway(walkway).expect("validated").floor,
            Segment::Travel { .. } => 0,
        }
    }

    fn pose(&self, k: usize, t: i64, rng: &mut ChaCha8Rng) -> Pose {
        let seg = &self.agent.segments[k];
        let (start, end) = seg.span();
        let frac = (t - start) as f64 / (end - start) as f64;
        match seg {
            Segment::Stay { place, .. } => {
                let p = self.world.place(place).expect("validated");
                let (e0, n0) = self.frame.to_local(LatLon::new(p.lat, p.lon));
                let (de, dn) = Self::uniform_in_disk(rng, p.radius_m);
                Pose { east: e0 + de, north: n0 + dn, floor: p.floor, cover: p.cover, place: Some(p.truth_label().to_string()) }
            }
            Segment::Walk { walkway, reverse, .. } => {
                let w = self.world.walkway(walkway).expect("validated");
                let line = polyline(&self.frame, w);
                let total = length(&line);
                let s = if *reverse { (1.0 - frac) * total } else { frac * total };
                let (e, n) = point_along(&line, s);
                let (de, dn) = Self::uniform_in_disk(rng, 1.0);
                let sheltered = w.sheltered.iter().any(|&[a, b]| a <= s && s <= b);
                let cover = if sheltered { Cover::Sheltered } else { Cover::Open };
                Pose { east: e + de, north: n + dn, floor: w.floor, cover, place: None }
            }
            Segment::Travel { cover, .. } => {
                let prev = &self.agent.segments[k - 1];
                let next = &self.agent.segments[k + 1];
                let a = self.anchor(prev, true);
                let b = self.anchor(next, false);
                let floor = if frac < 0.5 { self.anchor_floor(prev) } else { self.anchor_floor(next) };
                Pose {
                    east: a.0 + frac * (b.0 - a.0),
                    north: a.1 + frac * (b.1 - a.1),
                    floor,
                    cover: *cover,
                    place: None,
                }
            }
        }
    }

    /// Sample times of a clock with `interval` inside each segment.
    fn ticks(&self, interval: i64) -> Vec<(usize, i64)> {
        let phase = self.agent.phase_s;
        let mut out = Vec::new();
        for (k, seg) in self.agent.segments.iter().enumerate() {
            let (s, e) = seg.span();
            let mut t = phase + (s - phase).div_euclid(interval) * interval;
            if t < s {
                t += interval;
            }
            while t < e {
                out.push((k, t));
                t += interval;
            }
        }
        out
    }
}

/// Runs every agent through the world. Scans are taken every
/// `cfg.scan_interval_s`, fixes every `scenario.gps_interval_s`, both on the
/// agent's phase-shifted clock. Output is a pure function of the inputs.
pub fn simulate(world: &World, scenario: &Scenario, cfg: &Config, seed: u64) -> Result<Simulation, SynthError> {
    world.validate()?;
    scenario.validate(world)?;
    let radio = Radio::new(world);
    let jitter = Normal::new(0.0, scenario.rss_sigma_db).map_err(|e| SynthError::Scenario(e.to_string()))?;
    let mut users = Vec::with_capacity(scenario.agents.len());
    for (index, agent) in scenario.agents.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let sim = AgentSim { world, frame: radio.frame, agent };

        let mut scans = Vec::new();
        let mut scan_truth = Vec::new();
        for (k, t) in sim.ticks(cfg.scan_interval_s) {
            let pose = sim.pose(k, t, &mut rng);
            scans.push(radio.scan(scenario.start + t, pose.east, pose.north, pose.floor, &jitter, &mut rng));
            scan_truth.push(ScanTruth { t: scenario.start + t, place: pose.place });
        }

        let mut fixes = Vec::new();
        for (k, t) in sim.ticks(scenario.gps_interval_s) {
            let pose = sim.pose(k, t, &mut rng);
            let noise = scenario.gps.for_cover(pose.cover);
            let scatter = Normal::new(0.0, noise.scatter_m).map_err(|e| SynthError::Scenario(e.to_string()))?;
            let [lo, hi] = noise.accuracy_m;
            let accuracy = if hi > lo { rng.random_range(lo..hi) } else { lo };
            let p = radio.frame.to_geo(pose.east + scatter.sample(&mut rng), pose.north + scatter.sample(&mut rng));
            // receivers report about 1 cm and 0.1 m resolution
            fixes.push(GpsPoint {
                lat: (p.lat * 1e7).round() / 1e7,
                lon: (p.lon * 1e7).round() / 1e7,
                accuracy: ((accuracy * 10.0).round() / 10.0).max(0.1),
                timestamp: scenario.start + t,
            });
        }

        let visits = agent
            .segments
            .iter()
            .filter_map(|seg| match seg {
                Segment::Stay { place, start, end } => Some(TruthVisit {
                    place: world.place(place).expect("validated").truth_label().to_string(),
                    arrive: scenario.start + start,
                    depart: scenario.start + end,
                }),
                _ => None,
            })
            .collect();

        users.push(SimUser {
            user_id: agent.user.clone(),
            scans: ScanList::new(agent.user.clone(), scans),
            track: GpsTrack::new(agent.user.clone(), fixes),
            scan_truth,
            visits,
        });
    }
    Ok(Simulation { seed, users })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::decode_batch;
    use crate::similarity::cosine_similarity;
    use crate::Fingerprint;

    #[test]
    fn parked_agent_hour() {
        let (world, scenario) = presets::parked();
        let cfg = Config::default();
        let sim = simulate(&world, &scenario, &cfg, 7).unwrap();
        let scans = sim.users[0].scans.scans();
        assert_eq!(scans.len(), 12);
        for a in scans {
            for b in scans {
                let c = cosine_similarity(&Fingerprint::from_scan(a), &Fingerprint::from_scan(b)).unwrap().value();
                assert!(c >= 0.9, "{c}");
            }
        }
    }

    #[test]
    fn same_seed_same_output() {
        let (world, scenario) = presets::mall_revisit(4.0);
        let cfg = Config::default();
        let a = simulate(&world, &scenario, &cfg, 11).unwrap();
        let b = simulate(&world, &scenario, &cfg, 11).unwrap();
        assert_eq!(a, b);
        let c = simulate(&world, &scenario, &cfg, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn setup_toml_round_trip() {
        let (world, scenario) = presets::home_void_deck(1);
        let setup = SimSetup { world, scenario };
        let back = SimSetup::from_toml_str(&setup.to_toml_string()).unwrap();
        assert_eq!(back, setup);
    }

    #[test]
    fn truth_partitions_scans_and_batches_decode() {
        let (world, scenario) = presets::home_void_deck(2);
        let cfg = Config::default();
        let sim = simulate(&world, &scenario, &cfg, 3).unwrap();
        let u = &sim.users[0];
        assert_eq!(u.scan_truth.len(), u.scans.len());
        for (s, truth) in u.scans.scans().iter().zip(&u.scan_truth) {
            assert_eq!(s.timestamp(), truth.t);
        }
        let batches = sim.batches(scenario.start, 6 * 3600);
        let total: usize = batches.iter().map(|b| b.records.len()).sum();
        assert_eq!(total, u.scans.len() + u.track.len());
        for b in &batches {
            assert_eq!(&decode_batch(&encode_batch(b)).unwrap(), b);
        }
    }

    #[test]
    fn rejects_bad_world_and_scenario() {
        let (mut world, scenario) = presets::parked();
        let dup = world.aps[0].clone();
        world.aps.push(dup);
        assert!(matches!(world.validate(), Err(SynthError::World(_))));
        let (world, mut scenario2) = presets::parked();
        scenario2.agents[0].segments.push(Segment::Stay { place: "nowhere".into(), start: 5000, end: 6000 });
        assert!(matches!(scenario2.validate(&world), Err(SynthError::Scenario(_))));
        let _ = scenario;
        let mut quiet = World::new(world.origin);
        quiet.places = world.places.clone();
        assert!(matches!(quiet.validate(), Err(SynthError::World(_))));
    }
}
