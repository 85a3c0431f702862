//! GPS + WiFi fusion: indoor POIs per GPS stay region, home detection,
//! neighborhood activity around home and heatmaps of moving points.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{mean_position, EARTH_RADIUS_M};
use crate::micromobility::representative_of;
use crate::gps_pipeline::{clean_track, cluster_stay_points, extract_stay_points, GeoCluster, GpsTrack};
use crate::model::{Config, Fingerprint, GpsPoint, LatLon, PoiCluster, ScanList, StayPoint, StaySource};
use crate::similarity::{cosine_similarity, AdaptiveThreshold};
use crate::wifi_cluster::{extract_poi, ClusterRun};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FusionError {
    #[error("no stay points to choose a home from")]
    NoStayPoints,
}

/// Square-cell counts of GPS fixes on an equirectangular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub cell_m: f64,
    /// Latitude at which longitude degrees are converted to meters.
    pub reference_lat: f64,
    /// `(column, row)` to fix count.
    pub cells: BTreeMap<(i64, i64), u32>,
}

impl Heatmap {
    pub fn total(&self) -> u64 {
        self.cells.values().map(|&c| u64::from(c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    fn meters_per_degree(&self) -> (f64, f64) {
        let lat_m = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        (lat_m * self.reference_lat.to_radians().cos(), lat_m)
    }

    pub fn cell_of(&self, p: LatLon) -> (i64, i64) {
        let (lon_m, lat_m) = self.meters_per_degree();
        ((p.lon * lon_m / self.cell_m).floor() as i64, (p.lat * lat_m / self.cell_m).floor() as i64)
    }

    /// Closed ring (5 corners, counter-clockwise) bounding a cell.
    pub fn cell_polygon(&self, cell: (i64, i64)) -> [LatLon; 5] {
        let (lon_m, lat_m) = self.meters_per_degree();
        let west = cell.0 as f64 * self.cell_m / lon_m;
        let east = (cell.0 + 1) as f64 * self.cell_m / lon_m;
        let south = cell.1 as f64 * self.cell_m / lat_m;
        let north = (cell.1 + 1) as f64 * self.cell_m / lat_m;
        [
            LatLon::new(south, west),
            LatLon::new(south, east),
            LatLon::new(north, east),
            LatLon::new(north, west),
            LatLon::new(south, west),
        ]
    }
}

/// Bins fixes into `heatmap_cell_m` squares, projected at the mean latitude
/// of the input.
pub fn build_heatmap(points: &[GpsPoint], cfg: &Config) -> Heatmap {
    let reference_lat = mean_position(points.iter().map(GpsPoint::position)).map_or(0.0, |c| c.lat);
    let mut map = Heatmap { cell_m: cfg.heatmap_cell_m, reference_lat, cells: BTreeMap::new() };
    for p in points {
        let cell = map.cell_of(p.position());
        *map.cells.entry(cell).or_insert(0) += 1;
    }
    map
}

/// The stay region with the largest total dwell; ties go to the earliest
/// first arrival.
pub fn identify_home(clusters: &[GeoCluster]) -> Result<&GeoCluster, FusionError> {
    clusters
        .iter()
        .min_by(|a, b| b.total_dwell().cmp(&a.total_dwell()).then(a.first_arrival().cmp(&b.first_arrival())))
        .ok_or(FusionError::NoStayPoints)
}

/// WiFi POIs found inside one GPS stay region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPois {
    pub region: GeoCluster,
    /// Indices into the caller's scan list that fall inside the region's
    /// occupancy; `run` member indices point into this vector.
    pub scan_indices: Vec<usize>,
    pub run: ClusterRun<f64>,
}

impl RegionPois {
    /// Original scan index of a run member index.
    pub fn original_index(&self, member: usize) -> usize {
        self.scan_indices[member]
    }
}

fn scans_during(scans: &ScanList, intervals: &[(i64, i64)]) -> Vec<usize> {
    let mut set = BTreeSet::new();
    for &(a, b) in intervals {
        set.extend(scans.indices_within(a, b));
    }
    set.into_iter().collect()
}

/// GPS stay regions of a user, in discovery order.
pub fn stay_regions(track: &GpsTrack, cfg: &Config) -> Vec<GeoCluster> {
    let cleaned = clean_track(track, cfg);
    cluster_stay_points(&extract_stay_points(&cleaned, cfg), cfg)
}

/// Clusters the scans of every stay region into indoor POIs. POI ids are
/// scoped to their region.
pub fn region_pois(track: &GpsTrack, scans: &ScanList, cfg: &Config) -> Vec<RegionPois> {
    stay_regions(track, cfg)
        .into_iter()
        .map(|region| {
            let scan_indices = scans_during(scans, &region.occupancy());
            let run = extract_poi::<f64>(&scans.select(&scan_indices), cfg);
            RegionPois { region, scan_indices, run }
        })
        .collect()
}

/// A short-range place around home, seen only through WiFi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodPoi {
    pub poi_id: u32,
    /// One qualifying visit (`source == Fused`).
    pub stay: StayPoint,
    pub similarity_to_home: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodReport {
    pub home: StayPoint,
    /// POI id of the WiFi cluster recognised as home, if any cluster formed.
    pub home_poi: Option<u32>,
    pub home_fingerprint: Option<Fingerprint<f64>>,
    /// At most one entry per qualifying visit, ordered by arrival.
    pub neighborhood_pois: Vec<NeighborhoodPoi>,
    pub heatmap: Heatmap,
    pub moving_points_total: usize,
}

impl NeighborhoodReport {
    pub fn distinct_neighborhood_pois(&self) -> usize {
        self.neighborhood_pois.iter().map(|p| p.poi_id).collect::<BTreeSet<_>>().len()
    }

    /// Places recognised inside the home region: home plus each distinct
    /// neighborhood POI.
    pub fn fused_place_count(&self) -> usize {
        usize::from(self.home_poi.is_some()) + self.distinct_neighborhood_pois()
    }
}

fn clip(intervals: &[(i64, i64)], window: (i64, i64)) -> Vec<(i64, i64)> {
    intervals
        .iter()
        .filter_map(|&(a, b)| {
            let (lo, hi) = (a.max(window.0), b.min(window.1));
            (lo <= hi).then_some((lo, hi))
        })
        .collect()
}

/// Position of a set of scans: the fix nearest in time to each scan (within
/// the neighborhood fix window), reduced with the representative rule.
pub fn locate_scans(members: &[usize], sub: &ScanList, track: &GpsTrack, cfg: &Config) -> Option<LatLon> {
    let window = cfg.neighborhood_fix_window_s();
    let mut fixes: Vec<GpsPoint> = Vec::new();
    for &m in members {
        if let Some(f) = track.nearest_in_time(sub[m].timestamp(), Some(window), |_| true) {
            if !fixes.contains(f) {
                fixes.push(*f);
            }
        }
    }
    representative_of(&fixes, cfg.gps_accuracy_max_m).map(|(p, _, _)| p.position())
}

/// Fuses the home stay region with WiFi clustering over `window`.
///
/// The WiFi cluster with the longest dwell is home; a cluster whose
/// fingerprint reaches its adaptive threshold against home is folded into
/// home. Every other cluster visit lasting at least `min_dwell_s` becomes a
/// neighborhood POI, located from the fixes nearest its scans with the same
/// accuracy rule used for path representatives.
/// Cleaned fixes inside the window not covered by any home visit,
/// neighborhood visit or GPS stay elsewhere are moving points and feed the
/// heatmap.
pub fn extract_neighborhood(
    track: &GpsTrack,
    scans: &ScanList,
    home: &GeoCluster,
    window: (i64, i64),
    cfg: &Config,
) -> NeighborhoodReport {
    let occupancy = clip(&home.occupancy(), window);
    let scan_indices = scans_during(scans, &occupancy);
    let sub = scans.select(&scan_indices);
    let run = extract_poi::<f64>(&sub, cfg);
    let rule = AdaptiveThreshold::<f64>::from_config(cfg);
    let cleaned = clean_track(track, cfg);

    let home_cluster: Option<&PoiCluster<f64>> = run
        .clusters
        .iter()
        .min_by(|a, b| b.total_dwell().cmp(&a.total_dwell()).then(a.poi_id.cmp(&b.poi_id)));

    let mut covered: Vec<(i64, i64)> = Vec::new();
    let mut neighborhood_pois = Vec::new();
    for cluster in &run.clusters {
        let similarity_to_home = match home_cluster {
            Some(h) if h.poi_id == cluster.poi_id => 1.0,
            Some(h) => cosine_similarity(&cluster.fingerprint, &h.fingerprint).map_or(0.0, |s| s.value()),
            None => 0.0,
        };
        let is_home = home_cluster.is_some_and(|h| {
            h.poi_id == cluster.poi_id || similarity_to_home >= rule.for_pair(&cluster.fingerprint, &h.fingerprint)
        });
        for visit in cluster.visits.iter().filter(|v| v.dwell() >= cfg.min_dwell_s) {
            covered.push((visit.arrive, visit.depart));
            if is_home {
                continue;
            }
            let members: Vec<usize> = cluster
                .member_indices
                .iter()
                .copied()
                .filter(|&m| visit.contains(sub[m].timestamp()))
                .collect();
            neighborhood_pois.push(NeighborhoodPoi {
                poi_id: cluster.poi_id,
                stay: StayPoint {
                    centroid: locate_scans(&members, &sub, &cleaned, cfg),
                    arrive: visit.arrive,
                    depart: visit.depart,
                    source: StaySource::Fused,
                    label: Some(cluster.label()),
                },
                similarity_to_home,
            });
        }
    }
    neighborhood_pois.sort_by_key(|p| (p.stay.arrive, p.poi_id));

    for stay in extract_stay_points(&cleaned, cfg) {
        let overlaps_home = home.stay_points.iter().any(|h| stay.arrive <= h.depart && h.arrive <= stay.depart);
        if !overlaps_home {
            covered.push((stay.arrive, stay.depart));
        }
    }

    let moving: Vec<GpsPoint> = cleaned
        .within(window.0, window.1)
        .iter()
        .filter(|p| !covered.iter().any(|&(a, b)| a <= p.timestamp && p.timestamp <= b))
        .copied()
        .collect();
    let heatmap = build_heatmap(&moving, cfg);

    let (arrive, depart) = match (occupancy.first(), occupancy.last()) {
        (Some(first), Some(last)) => (first.0, last.1),
        _ => window,
    };
    NeighborhoodReport {
        home: StayPoint {
            centroid: Some(home.centroid),
            arrive,
            depart,
            source: StaySource::Fused,
            label: Some("home".to_string()),
        },
        home_poi: home_cluster.map(|h| h.poi_id),
        home_fingerprint: home_cluster.map(|h| h.fingerprint.clone()),
        neighborhood_pois,
        heatmap,
        moving_points_total: moving.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::LocalFrame;
    use crate::model::{ApObservation, MacAddr, ScanResult};

    fn frame() -> LocalFrame {
        LocalFrame::new(LatLon::new(1.345, 103.953))
    }

    fn fix(east: f64, north: f64, t: i64) -> GpsPoint {
        let p = frame().to_geo(east, north);
        GpsPoint { lat: p.lat, lon: p.lon, accuracy: 10.0, timestamp: t }
    }

    fn stay(east: f64, arrive: i64, depart: i64) -> StayPoint {
        StayPoint {
            centroid: Some(frame().to_geo(east, 0.0)),
            arrive,
            depart,
            source: StaySource::Gps,
            label: None,
        }
    }

    fn region(id: usize, stays: Vec<StayPoint>) -> GeoCluster {
        let centroid = stays[0].centroid.unwrap();
        GeoCluster { cluster_id: id, stay_points: stays, centroid }
    }

    #[test]
    fn heatmap_conservation() {
        let cfg = Config::default();
        assert!(build_heatmap(&[], &cfg).is_empty());
        let same = [fix(1.0, 1.0, 0), fix(2.0, 2.0, 60), fix(3.0, 1.5, 120)];
        let map = build_heatmap(&same, &cfg);
        assert_eq!(map.cells.len(), 1);
        assert_eq!(map.total(), 3);
        let spread: Vec<_> = (0..100).map(|k| fix((k * 37 % 500) as f64, (k * 53 % 400) as f64, k)).collect();
        for cell_m in [5.0, 25.0, 1000.0] {
            let map = build_heatmap(&spread, &Config { heatmap_cell_m: cell_m, ..Config::default() });
            assert_eq!(map.total(), 100);
        }
    }

    #[test]
    fn cell_polygon_contains_its_points() {
        let cfg = Config::default();
        let p = fix(12.0, 7.0, 0);
        let map = build_heatmap(&[p], &cfg);
        let (&cell, _) = map.cells.iter().next().unwrap();
        let ring = map.cell_polygon(cell);
        assert!(ring[0].lat <= p.lat && p.lat <= ring[2].lat);
        assert!(ring[0].lon <= p.lon && p.lon <= ring[2].lon);
        assert_eq!(ring[0], ring[4]);
    }

    #[test]
    fn home_is_longest_dwell() {
        assert_eq!(identify_home(&[]), Err(FusionError::NoStayPoints));
        let a = region(0, vec![stay(0.0, 0, 300 * 3600)]);
        let b = region(1, vec![stay(5000.0, 400 * 3600, 440 * 3600)]);
        assert_eq!(identify_home(std::slice::from_ref(&a)).unwrap().cluster_id, 0);
        assert_eq!(identify_home(&[b.clone(), a.clone()]).unwrap().cluster_id, 0);
        let c = region(2, vec![stay(9000.0, 100, 100 + 40 * 3600)]);
        let d = region(3, vec![stay(9000.0, 50, 50 + 40 * 3600)]);
        assert_eq!(identify_home(&[b, c, d]).unwrap().cluster_id, 3);
    }

    fn scan(t: i64, base: u64) -> ScanResult {
        ScanResult::new(t, (0..6).map(|k| ApObservation { mac: MacAddr::from_u64(base + k).unwrap(), rss: -60 - k as i16 }))
            .unwrap()
    }

    #[test]
    fn all_home_scans_give_no_neighborhood() {
        let cfg = Config::default();
        let track = GpsTrack::new("u", (0..60).map(|k| fix((k % 4) as f64, 0.0, k * 60)).collect());
        let scans = ScanList::new("u", (0..12).map(|k| scan(k * 300, 0)).collect());
        let regions = stay_regions(&track, &cfg);
        assert_eq!(regions.len(), 1);
        let report = extract_neighborhood(&track, &scans, &regions[0], (0, 3600), &cfg);
        assert_eq!(report.home_poi, Some(0));
        assert!(report.neighborhood_pois.is_empty());
        assert_eq!(report.heatmap.total() as usize, report.moving_points_total);
    }

    #[test]
    fn separate_wifi_place_inside_gps_stay() {
        let cfg = Config::default();
        let track = GpsTrack::new("u", (0..181).map(|k| fix((k % 5) as f64, (k % 3) as f64, k * 60)).collect());
        // home 0..5400 s, 30 min elsewhere, home again until 10800
        let mut scans: Vec<_> = (0..18).map(|k| scan(k * 300, 0)).collect();
        scans.extend((18..24).map(|k| scan(k * 300, 100)));
        scans.extend((24..37).map(|k| scan(k * 300, 0)));
        let scans = ScanList::new("u", scans);
        let regions = stay_regions(&track, &cfg);
        assert_eq!(regions.len(), 1);
        let report = extract_neighborhood(&track, &scans, &regions[0], (0, 10800), &cfg);
        assert_eq!(report.distinct_neighborhood_pois(), 1);
        assert_eq!(report.fused_place_count(), 2);
        let poi = &report.neighborhood_pois[0];
        assert_eq!((poi.stay.arrive, poi.stay.depart), (5400, 7200));
        assert!(poi.stay.centroid.is_some());
        assert_eq!(poi.similarity_to_home, 0.0);
    }
}
