//! Travel-path simplification. In-transit WiFi scans are clustered with a
//! fixed similarity threshold and every cluster is replaced by one GPS
//! point, trading path detail for a cleaner map.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dbscan::dbscan;
use crate::geo::{fix_distance_m, mean_position};
use crate::gps_pipeline::GpsTrack;
use crate::model::{Config, GpsPoint, ScanList, ScanResult, StayPoint};
use crate::scalar::Scalar;
use crate::similarity::cosine_similarity;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MicroError {
    #[error("user {user} has {scans} trajectory scans but no GPS fix to anchor them")]
    NoGpsFix { user: String, scans: usize },
    #[error("threshold sweep needs at least one value")]
    EmptySweep,
}

/// In-transit samples of one user: the scans (`S_T`) and fixes (`L_T`)
/// that fall between stays.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub scans: ScanList,
    pub track: GpsTrack,
}

/// Samples strictly between consecutive stays. Without any stay the whole
/// input is in transit.
pub fn extract_travel_windows(stays: &[StayPoint], track: &GpsTrack, scans: &ScanList) -> Trajectory {
    let in_gap = |t: i64| -> bool {
        if stays.is_empty() {
            return true;
        }
        stays.windows(2).any(|pair| t > pair[0].depart && t < pair[1].arrive)
    };
    let scan_idx: Vec<usize> = (0..scans.len()).filter(|&i| in_gap(scans[i].timestamp())).collect();
    let fixes: Vec<GpsPoint> = track.points().iter().filter(|p| in_gap(p.timestamp)).copied().collect();
    Trajectory { scans: scans.select(&scan_idx), track: GpsTrack::new(track.user_id.clone(), fixes) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentativeMode {
    /// Mean of the members' high-accuracy fixes.
    AveragedHighAccuracy,
    /// No member had a high-accuracy fix; the single best one is kept.
    BestOfLowAccuracy,
}

/// One simplified path point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCluster {
    /// Indices into the concatenated trajectory scans, ascending.
    pub member_indices: Vec<usize>,
    /// For averaged clusters `accuracy` is the mean accuracy of the averaged
    /// fixes and `timestamp` the earliest of them.
    pub representative: GpsPoint,
    pub mode: RepresentativeMode,
    /// Distinct fixes the representative was built from.
    pub contributing_fixes: usize,
}

/// Representative for fixes matched to one cluster's members.
///
/// Duplicate fixes (same user, same timestamp) count once.
pub fn representative_of(fixes: &[GpsPoint], accuracy_max: f64) -> Option<(GpsPoint, RepresentativeMode, usize)> {
    let mut distinct: Vec<GpsPoint> = Vec::with_capacity(fixes.len());
    for f in fixes {
        if !distinct.iter().any(|d| d == f) {
            distinct.push(*f);
        }
    }
    let good: Vec<&GpsPoint> = distinct.iter().filter(|f| f.accuracy <= accuracy_max).collect();
    if !good.is_empty() {
        let centre = mean_position(good.iter().map(|f| f.position()))?;
        let accuracy = good.iter().map(|f| f.accuracy).sum::<f64>() / good.len() as f64;
        let timestamp = good.iter().map(|f| f.timestamp).min()?;
        let point = GpsPoint { lat: centre.lat, lon: centre.lon, accuracy, timestamp };
        return Some((point, RepresentativeMode::AveragedHighAccuracy, good.len()));
    }
    distinct
        .iter()
        .min_by(|a, b| a.accuracy.total_cmp(&b.accuracy).then(a.timestamp.cmp(&b.timestamp)))
        .map(|best| (*best, RepresentativeMode::BestOfLowAccuracy, 1))
}

struct Flattened<'a> {
    scans: Vec<&'a ScanResult>,
    owner: Vec<usize>,
}

fn flatten(trajectories: &[Trajectory]) -> Flattened<'_> {
    let mut scans = Vec::new();
    let mut owner = Vec::new();
    for (k, t) in trajectories.iter().enumerate() {
        for s in t.scans.scans() {
            scans.push(s);
            owner.push(k);
        }
    }
    Flattened { scans, owner }
}

/// Clusters the in-transit scans of several users together; each scan is
/// anchored with the nearest-in-time fix of its own user.
pub fn cluster_paths(trajectories: &[Trajectory], cfg: &Config) -> Result<Vec<PathCluster>, MicroError> {
    cluster_paths_at::<f64>(trajectories, cfg.micromobility_eps, cfg)
}

pub fn cluster_paths_at<S: Scalar>(
    trajectories: &[Trajectory],
    eps: f64,
    cfg: &Config,
) -> Result<Vec<PathCluster>, MicroError> {
    for t in trajectories {
        if !t.scans.is_empty() && t.track.is_empty() {
            return Err(MicroError::NoGpsFix { user: t.scans.user_id().to_string(), scans: t.scans.len() });
        }
    }
    let flat = flatten(trajectories);
    let eps = S::of(eps);
    let outcome = dbscan(flat.scans.len(), cfg.min_pts_micro, |i| {
        (0..flat.scans.len())
            .filter(|&j| {
                j == i
                    || cosine_similarity::<S, _, _>(flat.scans[i], flat.scans[j]).is_ok_and(|c| c.value() >= eps)
            })
            .collect()
    });
    let mut groups = outcome.clusters();
    // with min_pts > 1 leftover scans still need a place on the path
    groups.extend(outcome.noise().into_iter().map(|i| vec![i]));
    groups.sort_by_key(|g| g[0]);

    Ok(groups
        .into_iter()
        .map(|members| {
            let fixes: Vec<GpsPoint> = members
                .iter()
                .filter_map(|&i| {
                    trajectories[flat.owner[i]]
                        .track
                        .nearest_in_time(flat.scans[i].timestamp(), None, |_| true)
                        .copied()
                })
                .collect();
            let (representative, mode, contributing_fixes) =
                representative_of(&fixes, cfg.gps_accuracy_max_m).expect("every owner has fixes");
            PathCluster { member_indices: members, representative, mode, contributing_fixes }
        })
        .collect())
}

/// Single-user form of [`cluster_paths`].
pub fn cluster_path(scans: &ScanList, track: &GpsTrack, cfg: &Config) -> Result<Vec<PathCluster>, MicroError> {
    cluster_paths(&[Trajectory { scans: scans.clone(), track: track.clone() }], cfg)
}

/// Mean distance between each scan's nearest fix (within
/// `micro_time_tolerance_s`) and the representative of the scan's cluster.
/// Scans without such a fix are left out; `None` when no scan qualifies.
pub fn average_distance_error(trajectories: &[Trajectory], clusters: &[PathCluster], cfg: &Config) -> Option<f64> {
    let flat = flatten(trajectories);
    let mut total = 0.0;
    let mut count = 0usize;
    for cluster in clusters {
        for &i in &cluster.member_indices {
            let track = &trajectories[flat.owner[i]].track;
            if let Some(fix) = track.nearest_in_time(flat.scans[i].timestamp(), Some(cfg.micro_time_tolerance_s), |_| true) {
                total += fix_distance_m(fix, &cluster.representative);
                count += 1;
            }
        }
    }
    (count > 0).then(|| total / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub cluster_count: usize,
    pub avg_distance_error_m: Option<f64>,
}

/// Runs the clustering once per threshold (in parallel) and reports the
/// cluster count and distance error of each, in input order.
pub fn sweep_threshold(trajectories: &[Trajectory], eps_values: &[f64], cfg: &Config) -> Result<Vec<SweepRow>, MicroError> {
    if eps_values.is_empty() {
        return Err(MicroError::EmptySweep);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = eps_values
            .iter()
            .map(|&eps| {
                scope.spawn(move || {
                    let clusters = cluster_paths_at::<f64>(trajectories, eps, cfg)?;
                    Ok(SweepRow {
                        eps,
                        cluster_count: clusters.len(),
                        avg_distance_error_m: average_distance_error(trajectories, &clusters, cfg),
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::LocalFrame;
    use crate::model::{ApObservation, LatLon, MacAddr, StaySource};

    fn frame() -> LocalFrame {
        LocalFrame::new(LatLon::new(1.345, 103.953))
    }

    fn fix(east: f64, accuracy: f64, t: i64) -> GpsPoint {
        let p = frame().to_geo(east, 0.0);
        GpsPoint { lat: p.lat, lon: p.lon, accuracy, timestamp: t }
    }

    fn scan(t: i64, macs: &[u64]) -> ScanResult {
        ScanResult::new(t, macs.iter().map(|&m| ApObservation { mac: MacAddr::from_u64(m).unwrap(), rss: -70 })).unwrap()
    }

    fn stay(arrive: i64, depart: i64) -> StayPoint {
        StayPoint { centroid: None, arrive, depart, source: StaySource::Gps, label: None }
    }

    #[test]
    fn travel_windows() {
        let track = GpsTrack::new("u", (0..10).map(|k| fix(k as f64, 10.0, k * 600)).collect());
        let scans = ScanList::new("u", (0..10).map(|k| scan(k * 600, &[1])).collect());

        let all = extract_travel_windows(&[], &track, &scans);
        assert_eq!((all.scans.len(), all.track.len()), (10, 10));

        let none = extract_travel_windows(&[stay(0, 5400)], &track, &scans);
        assert_eq!((none.scans.len(), none.track.len()), (0, 0));

        // stays [0, 1800] and [3000, 5400]: samples at 2400 only (strictly inside the gap)
        let gap = extract_travel_windows(&[stay(0, 1800), stay(3000, 5400)], &track, &scans);
        assert_eq!(gap.scans.scans().iter().map(|s| s.timestamp()).collect::<Vec<_>>(), vec![2400]);
        assert_eq!(gap.track.points().iter().map(|p| p.timestamp).collect::<Vec<_>>(), vec![2400]);
    }

    #[test]
    fn disjoint_scans_stay_separate() {
        let cfg = Config::default();
        let scans = ScanList::new("u", (0..5).map(|k| scan(k * 300, &[k as u64 + 1])).collect());
        let track = GpsTrack::new("u", (0..5).map(|k| fix(k as f64 * 300.0, 10.0, k * 300)).collect());
        let clusters = cluster_path(&scans, &track, &cfg).unwrap();
        assert_eq!(clusters.len(), 5);
        assert_eq!(average_distance_error(&[Trajectory { scans, track }], &clusters, &cfg), Some(0.0));
    }

    #[test]
    fn averages_high_accuracy_fixes() {
        let fixes = [fix(0.0, 10.0, 0), fix(100.0, 20.0, 300), fix(500.0, 40.0, 600)];
        let (rep, mode, used) = representative_of(&fixes, 25.0).unwrap();
        assert_eq!(mode, RepresentativeMode::AveragedHighAccuracy);
        assert_eq!(used, 2);
        let expected = mean_position([fixes[0].position(), fixes[1].position()]).unwrap();
        assert_eq!((rep.lat, rep.lon), (expected.lat, expected.lon));
    }

    #[test]
    fn keeps_best_low_accuracy_fix() {
        let fixes = [fix(0.0, 60.0, 0), fix(100.0, 40.0, 300)];
        let (rep, mode, used) = representative_of(&fixes, 25.0).unwrap();
        assert_eq!(mode, RepresentativeMode::BestOfLowAccuracy);
        assert_eq!(used, 1);
        assert_eq!(rep, fixes[1]);
    }

    #[test]
    fn needs_fixes_for_scans() {
        let scans = ScanList::new("u", vec![scan(0, &[1])]);
        let err = cluster_path(&scans, &GpsTrack::new("u", vec![]), &Config::default()).unwrap_err();
        assert!(matches!(err, MicroError::NoGpsFix { scans: 1, .. }));
        assert_eq!(sweep_threshold(&[], &[], &Config::default()), Err(MicroError::EmptySweep));
    }

    #[test]
    fn single_scan_single_representative() {
        let scans = ScanList::new("u", vec![scan(0, &[1, 2])]);
        let track = GpsTrack::new("u", vec![fix(0.0, 12.0, 30)]);
        let clusters = cluster_path(&scans, &track, &Config::default()).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].member_indices, vec![0]);
    }
}
