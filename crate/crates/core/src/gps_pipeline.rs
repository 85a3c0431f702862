//! GPS cleaning, stay-point extraction and geographic grouping of stays.

use serde::{Deserialize, Serialize};

use crate::dbscan::dbscan;
use crate::geo::{fix_distance_m, haversine_m, mean_position};
use crate::model::{Config, GpsPoint, LatLon, StayPoint, StaySource};

/// Time-ordered GPS fixes of one user.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GpsTrack {
    pub user_id: String,
    points: Vec<GpsPoint>,
}

impl GpsTrack {
    /// Sorts by timestamp (stable).
    pub fn new(user_id: impl Into<String>, mut points: Vec<GpsPoint>) -> Self {
        points.sort_by_key(|p| p.timestamp);
        Self { user_id: user_id.into(), points }
    }

    pub fn points(&self) -> &[GpsPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Fixes with `start <= t <= end`.
    pub fn within(&self, start: i64, end: i64) -> &[GpsPoint] {
        let lo = self.points.partition_point(|p| p.timestamp < start);
        let hi = self.points.partition_point(|p| p.timestamp <= end).max(lo);
        &self.points[lo..hi]
    }

    /// Fix closest in time to `t`, earlier one on ties, optionally limited to
    /// fixes accepted by `filter` and to `max_skew` seconds.
    pub fn nearest_in_time(
        &self,
        t: i64,
        max_skew: Option<i64>,
        filter: impl Fn(&GpsPoint) -> bool,
    ) -> Option<&GpsPoint> {
        let split = self.points.partition_point(|p| p.timestamp < t);
        let before = self.points[..split].iter().rev().find(|p| filter(p));
        let after = self.points[split..].iter().find(|p| filter(p));
        let best = match (before, after) {
            (Some(b), Some(a)) => {
                if t - b.timestamp <= a.timestamp - t {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (b, a) => b.or(a),
        }?;
        match max_skew {
            Some(limit) if (best.timestamp - t).abs() > limit => None,
            _ => Some(best),
        }
    }
}

/// Drops invalid, low-accuracy, non-advancing, zero-distance and
/// implausibly fast fixes. Each fix is judged against the last fix kept, so
/// cleaning a cleaned track changes nothing.
pub fn clean_track(track: &GpsTrack, cfg: &Config) -> GpsTrack {
    let mut kept: Vec<GpsPoint> = Vec::with_capacity(track.points.len());
    for point in &track.points {
        if point.validate().is_err() || point.accuracy > cfg.gps_accuracy_filter_m {
            continue;
        }
        if let Some(prev) = kept.last() {
            if point.timestamp <= prev.timestamp {
                continue;
            }
            if point.lat == prev.lat && point.lon == prev.lon {
                continue;
            }
            let speed = fix_distance_m(prev, point) / (point.timestamp - prev.timestamp) as f64;
            if speed > cfg.max_speed_mps {
                continue;
            }
        }
        kept.push(*point);
    }
    GpsTrack { user_id: track.user_id.clone(), points: kept }
}

fn centroid_of(points: &[GpsPoint]) -> LatLon {
    mean_position(points.iter().map(GpsPoint::position)).expect("window is nonempty")
}

/// Sliding-window stay detection. Starting from an anchor fix the window
/// grows while the next fix stays within `stay_radius_m` of the anchor and
/// every window fix stays within `stay_radius_m` of the window centroid. A
/// window spanning at least `min_dwell_s` becomes a stay and scanning resumes
/// after it; otherwise the anchor advances by one fix.
pub fn extract_stay_points(track: &GpsTrack, cfg: &Config) -> Vec<StayPoint> {
    let points = &track.points;
    let radius = cfg.stay_radius_m;
    let mut stays = Vec::new();
    let mut i = 0;
    while i < points.len() {
        let anchor = points[i];
        let (mut lat_sum, mut lon_sum) = (anchor.lat, anchor.lon);
        let mut end = i + 1;
        while end < points.len() {
            let next = points[end];
            if fix_distance_m(&anchor, &next) > radius {
                break;
            }
            let count = (end - i + 1) as f64;
            let centroid = LatLon::new((lat_sum + next.lat) / count, (lon_sum + next.lon) / count);
            if points[i..=end].iter().any(|p| haversine_m(p.position(), centroid) > radius) {
                break;
            }
            lat_sum += next.lat;
            lon_sum += next.lon;
            end += 1;
        }
        let (arrive, depart) = (anchor.timestamp, points[end - 1].timestamp);
        if depart - arrive >= cfg.min_dwell_s && depart > arrive {
            stays.push(StayPoint {
                centroid: Some(centroid_of(&points[i..end])),
                arrive,
                depart,
                source: StaySource::Gps,
                label: None,
            });
            i = end;
        } else {
            i += 1;
        }
    }
    stays
}

/// Stay points that belong to one physical place.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoCluster {
    pub cluster_id: usize,
    pub stay_points: Vec<StayPoint>,
    pub centroid: LatLon,
}

impl GeoCluster {
    pub fn total_dwell(&self) -> i64 {
        self.stay_points.iter().map(StayPoint::dwell).sum()
    }

    pub fn first_arrival(&self) -> i64 {
        self.stay_points.iter().map(|s| s.arrive).min().unwrap_or(i64::MAX)
    }

    /// `(arrive, depart)` of every member stay, time-ordered.
    pub fn occupancy(&self) -> Vec<(i64, i64)> {
        let mut out: Vec<_> = self.stay_points.iter().map(|s| (s.arrive, s.depart)).collect();
        out.sort_unstable();
        out
    }

    pub fn contains_time(&self, t: i64) -> bool {
        self.stay_points.iter().any(|s| s.contains(t))
    }
}

/// Groups stays with DBSCAN over centroid distance (`geo_eps_m`,
/// `geo_min_pts`). Stays left as noise still represent a visited place and
/// become singleton clusters. Clusters are ordered by their earliest member.
pub fn cluster_stay_points(stays: &[StayPoint], cfg: &Config) -> Vec<GeoCluster> {
    let positions: Vec<Option<LatLon>> = stays.iter().map(|s| s.centroid).collect();
    let outcome = dbscan(stays.len(), cfg.geo_min_pts, |i| {
        let Some(a) = positions[i] else {
            return vec![i];
        };
        (0..positions.len())
            .filter(|&j| j == i || positions[j].is_some_and(|b| haversine_m(a, b) <= cfg.geo_eps_m))
            .collect()
    });
    let mut groups = outcome.clusters();
    groups.extend(outcome.noise().into_iter().map(|i| vec![i]));
    groups.sort_by_key(|members| members[0]);
    groups
        .into_iter()
        .enumerate()
        .map(|(cluster_id, members)| {
            let stay_points: Vec<StayPoint> = members.iter().map(|&i| stays[i].clone()).collect();
            let centroid = mean_position(stay_points.iter().filter_map(|s| s.centroid))
                .unwrap_or(LatLon::new(f64::NAN, f64::NAN));
            GeoCluster { cluster_id, stay_points, centroid }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::LocalFrame;

    fn frame() -> LocalFrame {
        LocalFrame::new(LatLon::new(1.345, 103.953))
    }

    fn fix(east: f64, north: f64, accuracy: f64, t: i64) -> GpsPoint {
        let p = frame().to_geo(east, north);
        GpsPoint { lat: p.lat, lon: p.lon, accuracy, timestamp: t }
    }

    fn track(points: Vec<GpsPoint>) -> GpsTrack {
        GpsTrack::new("u", points)
    }

    #[test]
    fn drops_low_accuracy() {
        let cfg = Config::default();
        let t = track(vec![fix(0.0, 0.0, 10.0, 0), fix(5.0, 0.0, 120.0, 60), fix(10.0, 0.0, 10.0, 120)]);
        let cleaned = clean_track(&t, &cfg);
        assert_eq!(cleaned.len(), 2);
        assert!(cleaned.points().iter().all(|p| p.accuracy <= 50.0));
    }

    #[test]
    fn drops_zero_distance_runs() {
        let cfg = Config::default();
        let mut points: Vec<_> = (0..10).map(|k| fix(3.0, 3.0, 10.0, k * 60)).collect();
        points.push(fix(20.0, 3.0, 10.0, 600));
        let cleaned = clean_track(&track(points), &cfg);
        assert_eq!(cleaned.len(), 2);
        assert_eq!(cleaned.points()[0].timestamp, 0);
    }

    #[test]
    fn drops_sudden_jump() {
        let cfg = Config::default();
        let t = track(vec![fix(0.0, 0.0, 10.0, 0), fix(2000.0, 0.0, 10.0, 5), fix(10.0, 0.0, 10.0, 60)]);
        let speed = haversine_m(t.points()[0].position(), t.points()[1].position()) / 5.0;
        assert!((speed - 400.0).abs() < 0.5);
        let cleaned = clean_track(&t, &cfg);
        assert_eq!(cleaned.points().iter().map(|p| p.timestamp).collect::<Vec<_>>(), vec![0, 60]);
    }

    #[test]
    fn nearest_in_time_prefers_earlier_on_tie() {
        let t = track(vec![fix(0.0, 0.0, 10.0, 0), fix(1.0, 0.0, 40.0, 100), fix(2.0, 0.0, 10.0, 200)]);
        assert_eq!(t.nearest_in_time(100, None, |_| true).unwrap().timestamp, 100);
        assert_eq!(t.nearest_in_time(100, None, |p| p.accuracy < 25.0).unwrap().timestamp, 0);
        assert_eq!(t.nearest_in_time(160, None, |p| p.accuracy < 25.0).unwrap().timestamp, 200);
        assert!(t.nearest_in_time(500, Some(100), |_| true).is_none());
    }

    #[test]
    fn stationary_forty_minutes_is_one_stay() {
        let cfg = Config::default();
        let points: Vec<_> = (0..41).map(|k| fix((k % 3) as f64, (k % 2) as f64, 10.0, k * 60)).collect();
        let stays = extract_stay_points(&track(points.clone()), &cfg);
        assert_eq!(stays.len(), 1);
        assert_eq!((stays[0].arrive, stays[0].depart), (0, 2400));
        let expected = mean_position(points.iter().map(GpsPoint::position)).unwrap();
        let c = stays[0].centroid.unwrap();
        assert!((c.lat - expected.lat).abs() < 1e-12 && (c.lon - expected.lon).abs() < 1e-12);
    }

    #[test]
    fn walking_never_stays() {
        let cfg = Config::default();
        let points: Vec<_> = (0..120).map(|k| fix(k as f64 * 80.0, 0.0, 10.0, k * 60)).collect();
        assert!(extract_stay_points(&track(points), &cfg).is_empty());
    }

    #[test]
    fn stays_cluster_by_distance() {
        let cfg = Config::default();
        let stay = |east: f64, t: i64| StayPoint {
            centroid: Some(frame().to_geo(east, 0.0)),
            arrive: t,
            depart: t + 1800,
            source: StaySource::Gps,
            label: None,
        };
        let near = cluster_stay_points(&[stay(0.0, 0), stay(10.0, 5000)], &cfg);
        assert_eq!(near.len(), 1);
        assert_eq!(near[0].total_dwell(), 3600);
        let far = cluster_stay_points(&[stay(0.0, 0), stay(5000.0, 5000)], &cfg);
        assert_eq!(far.len(), 2);
    }

    #[test]
    fn noise_stays_become_singletons() {
        let cfg = Config { geo_min_pts: 2, ..Config::default() };
        let stay = |east: f64, t: i64| StayPoint {
            centroid: Some(frame().to_geo(east, 0.0)),
            arrive: t,
            depart: t + 1800,
            source: StaySource::Gps,
            label: None,
        };
        let clusters = cluster_stay_points(&[stay(5000.0, 0), stay(0.0, 5000), stay(10.0, 9000)], &cfg);
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].stay_points.len(), 1);
        assert_eq!(clusters[1].stay_points.len(), 2);
    }
}
