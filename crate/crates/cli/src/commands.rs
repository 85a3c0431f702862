use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use wifitrace::community::{build_graph, louvain, PoiNode};
use wifitrace::fusion::{extract_neighborhood, identify_home, locate_scans, region_pois, stay_regions, RegionPois};
use wifitrace::geo::haversine_m;
use wifitrace::gps_pipeline::{clean_track, extract_stay_points, GpsTrack};
use wifitrace::ingest::{ingest_batch, IngestReport, Record, Store};
use wifitrace::micromobility::{cluster_paths, extract_travel_windows, sweep_threshold, MicroError, Trajectory};
use wifitrace::model::{Config, LatLon, ScanList};
use wifitrace::synth::{presets, simulate, SimSetup};

use crate::error::CliError;
use crate::manifest::{InputDigest, RunManifest};
use crate::output::{collection_text, csv_text, feature, point, polygon, props, write_file};

pub const POI_COLUMNS: [&str; 6] = ["region", "poi_id", "date", "start_time", "end_time", "dwell_s"];
pub const SWEEP_COLUMNS: [&str; 3] = ["eps", "cluster_count", "avg_distance_error_m"];
pub const COMMUNITY_COLUMNS: [&str; 4] = ["user", "region", "poi_id", "community"];

/// Inclusive time range; open ends are unbounded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Window {
    pub from: Option<i64>,
    pub to: Option<i64>,
}

impl Window {
    fn bounds(&self) -> (i64, i64) {
        (self.from.unwrap_or(i64::MIN), self.to.unwrap_or(i64::MAX))
    }

    fn contains(&self, t: i64) -> bool {
        let (a, b) = self.bounds();
        (a..=b).contains(&t)
    }
}

/// Settings shared by every command.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub config: Config,
    pub record_timings: bool,
}

struct Timer {
    enabled: bool,
    stages: BTreeMap<String, u128>,
    at: Instant,
}

impl Timer {
    fn new(enabled: bool) -> Self {
        Self { enabled, stages: BTreeMap::new(), at: Instant::now() }
    }

    fn lap(&mut self, stage: &str) {
        if self.enabled {
            self.stages.insert(stage.to_string(), self.at.elapsed().as_millis());
            self.at = Instant::now();
        }
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

struct Loaded {
    scans: ScanList,
    track: GpsTrack,
    digest: InputDigest,
}

fn load_user(store: &Store, user: &str, window: Window) -> Result<Loaded, CliError> {
    let records: Vec<Record> = store.read_records(user)?.into_iter().filter(|r| window.contains(r.timestamp())).collect();
    let digest = InputDigest::of(user, &records);
    let (mut scans, mut fixes) = (Vec::new(), Vec::new());
    for r in records {
        match r {
            Record::Scan(s) => scans.push(s),
            Record::Fix(f) => fixes.push(f),
        }
    }
    Ok(Loaded { scans: ScanList::new(user, scans), track: GpsTrack::new(user, fixes), digest })
}

fn open_store(dir: &Path) -> Result<Store, CliError> {
    if !dir.is_dir() {
        return Err(CliError::io(dir, "store directory does not exist"));
    }
    Ok(Store::open(dir)?)
}

fn users_or_all(store: &Store, users: &[String]) -> Result<Vec<String>, CliError> {
    let mut users = if users.is_empty() { store.users()? } else { users.to_vec() };
    users.sort();
    users.dedup();
    Ok(users)
}

fn window_params(m: &mut RunManifest, window: Window) {
    m.param("from", window.from);
    m.param("to", window.to);
}

fn finish(mut manifest: RunManifest, out: &Path, files: Vec<(&str, String)>, timer: Timer) -> Result<Vec<PathBuf>, CliError> {
    manifest.outputs = files.iter().map(|(name, _)| name.to_string()).collect();
    manifest.outputs.push("manifest.json".into());
    manifest.stage_timings_ms = timer.stages;
    let mut paths = Vec::new();
    for (name, text) in files {
        let path = out.join(name);
        write_file(&path, text.as_bytes())?;
        paths.push(path);
    }
    manifest.write(out)?;
    paths.push(out.join("manifest.json"));
    Ok(paths)
}

fn date_time(t: i64, cfg: &Config) -> (String, String) {
    match chrono::DateTime::from_timestamp(t + cfg.tz_offset_s, 0) {
        Some(d) => (d.format("%Y-%m-%d").to_string(), d.format("%H:%M:%S").to_string()),
        None => (String::new(), String::new()),
    }
}

#[derive(Debug, Default)]
pub struct IngestSummary {
    pub reports: Vec<(PathBuf, IngestReport)>,
}

impl IngestSummary {
    pub fn new_records(&self) -> usize {
        self.reports.iter().map(|(_, r)| r.accepted).sum()
    }

    pub fn rejects(&self) -> usize {
        self.reports.iter().map(|(_, r)| r.rejects.len()).sum()
    }
}

/// Ingests every batch file in order. A corrupt stream stops the run; line
/// rejects are collected and reported.
pub fn cmd_ingest(paths: &[PathBuf], store_dir: &Path, opts: &RunOptions) -> Result<IngestSummary, CliError> {
    let store = Store::open(store_dir)?;
    let mut summary = IngestSummary::default();
    for path in paths {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let report = ingest_batch(&store, &bytes, &opts.config).map_err(|e| match CliError::from(e) {
            CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
            other => other,
        })?;
        summary.reports.push((path.clone(), report));
    }
    Ok(summary)
}

fn poi_rows(regions: &[RegionPois], cfg: &Config) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in regions {
        let mut visits: Vec<(i64, i64, String)> = Vec::new();
        for c in &r.run.clusters {
            for v in &c.visits {
                visits.push((v.arrive, v.depart, c.label()));
            }
        }
        visits.sort();
        for (arrive, depart, label) in visits {
            let (date, start) = date_time(arrive, cfg);
            let (_, end) = date_time(depart, cfg);
            rows.push(vec![r.region.cluster_id.to_string(), label, date, start, end, (depart - arrive).to_string()]);
        }
    }
    rows
}

/// POI table CSV and GeoJSON for one user.
pub fn cmd_poi(store_dir: &Path, user: &str, window: Window, out: &Path, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &opts.config;
    let mut timer = Timer::new(opts.record_timings);
    let store = open_store(store_dir)?;
    let data = load_user(&store, user, window)?;
    timer.lap("load");
    let regions = region_pois(&data.track, &data.scans, cfg);
    timer.lap("cluster");

    let mut manifest = RunManifest::new("poi", cfg);
    manifest.param("user", user);
    window_params(&mut manifest, window);
    manifest.inputs.push(data.digest);
    let digest = manifest.digest();

    let cleaned = clean_track(&data.track, cfg);
    let mut features = Vec::new();
    for r in &regions {
        features.push(feature(
            point(Some(r.region.centroid)),
            props([
                ("kind", json!("region")),
                ("region", json!(r.region.cluster_id)),
                ("stays", json!(r.region.stay_points.len())),
                ("dwell_s", json!(r.region.total_dwell())),
                ("source", json!("gps")),
            ]),
        ));
        let sub = data.scans.select(&r.scan_indices);
        for c in &r.run.clusters {
            features.push(feature(
                point(locate_scans(&c.member_indices, &sub, &cleaned, cfg)),
                props([
                    ("kind", json!("poi")),
                    ("region", json!(r.region.cluster_id)),
                    ("poi_id", json!(c.label())),
                    ("visits", json!(c.visits.len())),
                    ("scans", json!(c.len())),
                    ("dwell_s", json!(c.total_dwell())),
                    ("source", json!("wifi")),
                ]),
            ));
        }
    }
    create_dir(out)?;
    let files = vec![
        ("pois.csv", csv_text(&digest, &POI_COLUMNS, &poi_rows(&regions, cfg))),
        ("pois.geojson", collection_text(&digest, features)),
    ];
    timer.lap("write");
    finish(manifest, out, files, timer)
}

/// Neighborhood report GeoJSON for one user's home region.
pub fn cmd_neighborhood(store_dir: &Path, user: &str, window: Window, out: &Path, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &opts.config;
    let mut timer = Timer::new(opts.record_timings);
    let store = open_store(store_dir)?;
    let data = load_user(&store, user, window)?;
    timer.lap("load");
    let regions = stay_regions(&data.track, cfg);
    let home = identify_home(&regions).map_err(|e| CliError::Domain(format!("{user}: {e}")))?;
    let report = extract_neighborhood(&data.track, &data.scans, home, window.bounds(), cfg);
    timer.lap("fuse");

    let mut manifest = RunManifest::new("neighborhood", cfg);
    manifest.param("user", user);
    window_params(&mut manifest, window);
    manifest.inputs.push(data.digest);
    let digest = manifest.digest();

    let mut features = vec![feature(
        point(report.home.centroid),
        props([
            ("kind", json!("home")),
            ("region", json!(home.cluster_id)),
            ("poi_id", report.home_poi.map_or(Value::Null, |p| json!(wifitrace::model::poi_label(p)))),
            ("arrive", json!(report.home.arrive)),
            ("depart", json!(report.home.depart)),
            ("dwell_s", json!(home.total_dwell())),
            ("source", json!(report.home.source)),
        ]),
    )];
    for p in &report.neighborhood_pois {
        features.push(feature(
            point(p.stay.centroid),
            props([
                ("kind", json!("neighborhood")),
                ("poi_id", json!(wifitrace::model::poi_label(p.poi_id))),
                ("arrive", json!(p.stay.arrive)),
                ("depart", json!(p.stay.depart)),
                ("dwell_s", json!(p.stay.dwell())),
                ("similarity_to_home", json!(p.similarity_to_home)),
                ("source", json!(p.stay.source)),
            ]),
        ));
    }
    for (&cell, &count) in &report.heatmap.cells {
        features.push(feature(
            polygon(&report.heatmap.cell_polygon(cell)),
            props([("kind", json!("heatmap")), ("cell", json!([cell.0, cell.1])), ("count", json!(count))]),
        ));
    }
    create_dir(out)?;
    let files = vec![("neighborhood.geojson", collection_text(&digest, features))];
    timer.lap("write");
    finish(manifest, out, files, timer)
}

/// Simplified-path GeoJSON at `micromobility_eps` plus the sweep CSV.
pub fn cmd_micro(
    store_dir: &Path,
    users: &[String],
    window: Window,
    eps_values: &[f64],
    out: &Path,
    opts: &RunOptions,
) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &opts.config;
    let mut timer = Timer::new(opts.record_timings);
    let store = open_store(store_dir)?;
    let users = users_or_all(&store, users)?;
    let mut manifest = RunManifest::new("micro", cfg);
    manifest.param("users", &users);
    window_params(&mut manifest, window);
    manifest.param("eps", eps_values);
    let mut trajectories = Vec::new();
    for u in &users {
        let data = load_user(&store, u, window)?;
        manifest.inputs.push(data.digest);
        let cleaned = clean_track(&data.track, cfg);
        let stays = extract_stay_points(&cleaned, cfg);
        trajectories.push(extract_travel_windows(&stays, &cleaned, &data.scans));
    }
    timer.lap("load");
    let domain = |e: MicroError| CliError::Domain(e.to_string());
    let clusters = cluster_paths(&trajectories, cfg).map_err(domain)?;
    let sweep = sweep_threshold(&trajectories, eps_values, cfg).map_err(domain)?;
    timer.lap("cluster");
    let digest = manifest.digest();

    let owners = owners(&trajectories);
    let features = clusters
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut members: Vec<&str> = c.member_indices.iter().map(|&i| owners[i]).collect();
            members.dedup();
            feature(
                point(Some(c.representative.position())),
                props([
                    ("kind", json!("path")),
                    ("cluster", json!(k)),
                    ("scans", json!(c.member_indices.len())),
                    ("users", json!(members.len())),
                    ("mode", json!(c.mode)),
                    ("contributing_fixes", json!(c.contributing_fixes)),
                    ("accuracy_m", json!(c.representative.accuracy)),
                ]),
            )
        })
        .collect();
    let rows: Vec<Vec<String>> = sweep
        .iter()
        .map(|r| {
            vec![r.eps.to_string(), r.cluster_count.to_string(), r.avg_distance_error_m.map_or(String::new(), |e| format!("{e:.3}"))]
        })
        .collect();
    create_dir(out)?;
    let files = vec![("paths.geojson", collection_text(&digest, features)), ("sweep.csv", csv_text(&digest, &SWEEP_COLUMNS, &rows))];
    timer.lap("write");
    finish(manifest, out, files, timer)
}

fn owners(trajectories: &[Trajectory]) -> Vec<&str> {
    trajectories.iter().flat_map(|t| std::iter::repeat_n(t.scans.user_id(), t.scans.len())).collect()
}

/// Parses `lat,lon,radius_m`.
pub fn parse_region(s: &str) -> Result<(LatLon, f64), CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Io(format!("region {s:?}: {e}")))?;
    match parts[..] {
        [lat, lon, r] if LatLon::new(lat, lon).is_valid() && r > 0.0 => Ok((LatLon::new(lat, lon), r)),
        _ => Err(CliError::Io(format!("region {s:?}: expected lat,lon,radius_m"))),
    }
}

/// Community CSV over the POIs of all (or the listed) users.
pub fn cmd_communities(
    store_dir: &Path,
    users: &[String],
    window: Window,
    region: Option<(LatLon, f64)>,
    threshold: Option<f64>,
    out: &Path,
    opts: &RunOptions,
) -> Result<Vec<PathBuf>, CliError> {
    let cfg = &opts.config;
    let mut timer = Timer::new(opts.record_timings);
    let store = open_store(store_dir)?;
    let users = users_or_all(&store, users)?;
    let threshold = threshold.unwrap_or(cfg.louvain_partition_threshold);
    let mut manifest = RunManifest::new("communities", cfg);
    manifest.param("users", &users);
    window_params(&mut manifest, window);
    manifest.param("region", region.map(|(c, r)| [c.lat, c.lon, r]));
    manifest.param("threshold", threshold);

    let mut nodes = Vec::new();
    let mut node_region = Vec::new();
    for u in &users {
        let data = load_user(&store, u, window)?;
        manifest.inputs.push(data.digest);
        for r in region_pois(&data.track, &data.scans, cfg) {
            if region.is_some_and(|(c, radius)| haversine_m(c, r.region.centroid) > radius) {
                continue;
            }
            for c in r.run.clusters {
                nodes.push(PoiNode { user_id: u.clone(), poi_id: c.poi_id, fingerprint: c.fingerprint });
                node_region.push(r.region.cluster_id);
            }
        }
    }
    timer.lap("pois");
    if nodes.is_empty() {
        return Err(CliError::Domain("no POIs found for the selected users".into()));
    }
    let graph = build_graph(nodes, threshold);
    let partition = louvain(&graph);
    timer.lap("louvain");
    manifest.param("modularity", partition.modularity);
    manifest.param("pairs_evaluated", graph.pairs_evaluated);
    let digest = manifest.digest();

    let rows: Vec<Vec<String>> = graph
        .nodes
        .iter()
        .zip(&node_region)
        .zip(&partition.communities)
        .map(|((n, region), c)| vec![n.user_id.clone(), region.to_string(), wifitrace::model::poi_label(n.poi_id), c.to_string()])
        .collect();
    create_dir(out)?;
    let files = vec![("communities.csv", csv_text(&digest, &COMMUNITY_COLUMNS, &rows))];
    timer.lap("write");
    finish(manifest, out, files, timer)
}

/// Where synthetic input comes from.
pub enum SynthSource<'a> {
    Preset(&'a str),
    SetupFile(&'a Path),
}

/// Simulates and writes batches, `truth.json` and the `setup.toml` used.
pub fn cmd_synth(source: SynthSource<'_>, seed: u64, out: &Path, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let setup = match source {
        SynthSource::Preset(name) => {
            let (world, scenario) = presets::by_name(name, seed)
                .ok_or_else(|| CliError::Domain(format!("unknown preset {name:?}; one of {}", presets::NAMES.join(", "))))?;
            SimSetup { world, scenario }
        }
        SynthSource::SetupFile(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            SimSetup::from_toml_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
        }
    };
    let sim = simulate(&setup.world, &setup.scenario, &opts.config, seed)?;
    create_dir(out)?;
    let mut paths = sim.write(out, setup.scenario.start, &opts.config)?;
    let setup_path = out.join("setup.toml");
    write_file(&setup_path, setup.to_toml_string().as_bytes())?;
    paths.push(out.join(wifitrace::synth::TRUTH_FILE));
    paths.push(setup_path);
    Ok(paths)
}
