//! Indoor POI extraction: density clustering of WiFi scans under cosine
//! similarity with the adaptive threshold, followed by per-cluster
//! fingerprints and visit intervals.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dbscan::dbscan;
use crate::model::{Config, Fingerprint, MacAddr, PoiCluster, RssVector, ScanList, ScanResult, Visit};
use crate::scalar::Scalar;
use crate::similarity::{cosine_similarity, AdaptiveThreshold};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClusterError {
    #[error("cluster has no member scans")]
    EmptyCluster,
    #[error("member index {index} out of range for {len} scans")]
    MemberOutOfRange { index: usize, len: usize },
}

/// Outcome of clustering one scan list.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRun<S: Scalar> {
    pub input_len: usize,
    pub clusters: Vec<PoiCluster<S>>,
    /// Indices belonging to no cluster, ascending.
    pub noise: Vec<usize>,
    /// Pairwise similarity evaluations performed; never above `n * n`.
    pub similarity_evaluations: usize,
}

impl<S: Scalar> ClusterRun<S> {
    /// Cluster index per input scan (`None` for noise).
    pub fn assignment(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.input_len];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &i in &cluster.member_indices {
                out[i] = Some(c);
            }
        }
        out
    }

    pub fn cluster_of(&self, index: usize) -> Option<&PoiCluster<S>> {
        self.clusters.iter().find(|c| c.member_indices.binary_search(&index).is_ok())
    }
}

/// Whether `candidate` is a neighbour of `anchor`. Empty scans are only
/// neighbours of themselves.
fn is_neighbor<S: Scalar>(anchor: &ScanResult, candidate: &ScanResult, rule: &AdaptiveThreshold<S>) -> bool {
    match cosine_similarity::<S, _, _>(anchor, candidate) {
        Ok(score) => score.value() >= rule.for_pair(anchor, candidate),
        Err(_) => false,
    }
}

fn neighbors_counted<S: Scalar>(
    anchor: usize,
    all: &ScanList,
    rule: &AdaptiveThreshold<S>,
    evaluations: &mut usize,
) -> Vec<usize> {
    let scans = all.scans();
    let base = &scans[anchor];
    let mut out = Vec::new();
    for (i, other) in scans.iter().enumerate() {
        if i == anchor {
            out.push(i);
            continue;
        }
        *evaluations += 1;
        if is_neighbor(base, other, rule) {
            out.push(i);
        }
    }
    out
}

/// Every scan whose similarity to `all[anchor]` reaches the pair's adaptive
/// threshold, the anchor included.
pub fn neighbors_of<S: Scalar>(anchor: usize, all: &ScanList, cfg: &Config) -> Vec<usize> {
    let mut evaluations = 0;
    neighbors_counted(anchor, all, &AdaptiveThreshold::<S>::from_config(cfg), &mut evaluations)
}

/// Clusters `scans` into indoor POIs using the adaptive threshold from
/// `cfg` and `cfg.min_pts_poi`.
pub fn extract_poi<S: Scalar>(scans: &ScanList, cfg: &Config) -> ClusterRun<S> {
    extract_poi_with(scans, &AdaptiveThreshold::from_config(cfg), cfg.min_pts_poi, cfg)
}

/// [`extract_poi`] with an explicit threshold rule and density.
pub fn extract_poi_with<S: Scalar>(
    scans: &ScanList,
    rule: &AdaptiveThreshold<S>,
    min_pts: usize,
    cfg: &Config,
) -> ClusterRun<S> {
    let mut evaluations = 0;
    let outcome = dbscan(scans.len(), min_pts, |i| neighbors_counted(i, scans, rule, &mut evaluations));
    let noise = outcome.noise();
    let clusters = outcome
        .clusters()
        .into_iter()
        .enumerate()
        .map(|(id, members)| {
            let fingerprint = build_fingerprint(&members, scans).expect("dbscan clusters are nonempty");
            let visits = split_visits(&members, scans, cfg);
            PoiCluster { poi_id: id as u32, member_indices: members, fingerprint, visits }
        })
        .collect();
    ClusterRun { input_len: scans.len(), clusters, noise, similarity_evaluations: evaluations }
}

/// Mean RSS per MAC over the member scans in which that MAC was heard.
pub fn build_fingerprint<S: Scalar>(members: &[usize], scans: &ScanList) -> Result<Fingerprint<S>, ClusterError> {
    if members.is_empty() {
        return Err(ClusterError::EmptyCluster);
    }
    let mut sums: BTreeMap<MacAddr, (S, usize)> = BTreeMap::new();
    for &index in members {
        let scan = scans
            .get(index)
            .ok_or(ClusterError::MemberOutOfRange { index, len: scans.len() })?;
        for (mac, rss) in RssVector::<S>::rss_entries(scan) {
            let slot = sums.entry(mac).or_insert((S::zero(), 0));
            slot.0 += rss;
            slot.1 += 1;
        }
    }
    Ok(Fingerprint::from_entries(
        sums.into_iter()
            .map(|(mac, (sum, count))| (mac, sum / S::from_usize(count).expect("count fits the scalar"))),
    ))
}

/// Splits the members' timestamps into visits wherever two consecutive
/// member scans are more than `cfg.visit_gap_s()` apart. Each scan stands for
/// one sampling period, so a visit ends one scan interval after its last
/// scan.
pub fn split_visits(members: &[usize], scans: &ScanList, cfg: &Config) -> Vec<Visit> {
    let mut times: Vec<i64> = members.iter().map(|&i| scans[i].timestamp()).collect();
    times.sort_unstable();
    let mut visits = Vec::new();
    let mut iter = times.into_iter();
    let Some(first) = iter.next() else {
        return visits;
    };
    let (mut arrive, mut last) = (first, first);
    for t in iter {
        if t - last > cfg.visit_gap_s() {
            visits.push(Visit { arrive, depart: last + cfg.scan_interval_s });
            arrive = t;
        }
        last = t;
    }
    visits.push(Visit { arrive, depart: last + cfg.scan_interval_s });
    visits
}

/// Finds the stored POI a new fingerprint belongs to: the most similar one,
/// provided it clears the pair's threshold. Ties go to the lowest id.
pub fn match_revisit<S: Scalar>(candidate: &Fingerprint<S>, known: &[(u32, Fingerprint<S>)], cfg: &Config) -> Option<u32> {
    let rule = AdaptiveThreshold::<S>::from_config(cfg);
    let mut best: Option<(u32, S)> = None;
    for (id, stored) in known {
        let Ok(score) = cosine_similarity(candidate, stored) else {
            continue;
        };
        let score = score.value();
        if score < rule.for_pair(candidate, stored) {
            continue;
        }
        best = match best {
            Some((best_id, best_score)) if best_score > score || (best_score == score && best_id < *id) => {
                Some((best_id, best_score))
            }
            _ => Some((*id, score)),
        };
    }
    best.map(|(id, _)| id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ApObservation;

    fn mac(i: u64) -> MacAddr {
        MacAddr::from_u64(i).unwrap()
    }

    fn scan(t: i64, aps: &[(u64, i16)]) -> ScanResult {
        ScanResult::new(t, aps.iter().map(|&(m, rss)| ApObservation { mac: mac(m), rss })).unwrap()
    }

    fn list(scans: Vec<ScanResult>) -> ScanList {
        ScanList::new("u", scans)
    }

    #[test]
    fn empty_input_gives_empty_run() {
        let run = extract_poi::<f64>(&list(vec![]), &Config::default());
        assert!(run.clusters.is_empty());
        assert!(run.noise.is_empty());
    }

    #[test]
    fn below_min_pts_is_noise() {
        let aps = [(1, -50), (2, -60)];
        let scans = list((0..3).map(|k| scan(k * 300, &aps)).collect());
        let run = extract_poi::<f64>(&scans, &Config::default());
        assert!(run.clusters.is_empty());
        assert_eq!(run.noise, vec![0, 1, 2]);
    }

    #[test]
    fn two_disjoint_places() {
        let x = [(1, -50), (2, -60), (3, -70)];
        let z = [(11, -50), (12, -60), (13, -70)];
        let mut scans: Vec<_> = (0..5).map(|k| scan(k * 300, &x)).collect();
        scans.extend((5..10).map(|k| scan(k * 300, &z)));
        let run = extract_poi::<f64>(&list(scans), &Config::default());
        assert_eq!(run.clusters.len(), 2);
        assert_eq!(run.clusters[0].member_indices, vec![0, 1, 2, 3, 4]);
        assert_eq!(run.clusters[1].member_indices, vec![5, 6, 7, 8, 9]);
        assert_eq!(run.clusters[0].label(), "01");
        assert_eq!(run.clusters[1].label(), "02");
        assert!(run.similarity_evaluations <= 100);
    }

    #[test]
    fn neighbors_identical_and_disjoint() {
        let x = [(1, -50), (2, -60)];
        let mut scans: Vec<_> = (0..5).map(|k| scan(k, &x)).collect();
        scans.push(scan(10, &[(9, -40)]));
        scans.push(scan(11, &[(8, -40)]));
        let scans = list(scans);
        let cfg = Config::default();
        assert_eq!(neighbors_of::<f64>(0, &scans, &cfg), vec![0, 1, 2, 3, 4]);
        assert_eq!(neighbors_of::<f64>(5, &scans, &cfg), vec![5]);
    }

    #[test]
    fn empty_scan_is_only_its_own_neighbor() {
        let scans = list(vec![scan(0, &[]), scan(1, &[(1, -40)]), scan(2, &[])]);
        assert_eq!(neighbors_of::<f64>(0, &scans, &Config::default()), vec![0]);
    }

    #[test]
    fn fingerprint_means_over_occurrences() {
        let scans = list(vec![scan(0, &[(1, -40)]), scan(1, &[(1, -60)])]);
        let f = build_fingerprint::<f64>(&[0, 1], &scans).unwrap();
        assert_eq!(f.entries(), &[(mac(1), -50.0)]);

        let scans = list(vec![scan(0, &[(1, -40), (2, -70)]), scan(1, &[(1, -60)])]);
        let f = build_fingerprint::<f64>(&[0, 1], &scans).unwrap();
        assert_eq!(f.entries(), &[(mac(1), -50.0), (mac(2), -70.0)]);
        assert_eq!(f.ap_count(), 2);

        let f = build_fingerprint::<f64>(&[1], &scans).unwrap();
        assert_eq!(f, Fingerprint::from_scan(&scans[1]));

        assert_eq!(build_fingerprint::<f64>(&[], &scans), Err(ClusterError::EmptyCluster));
        assert!(matches!(
            build_fingerprint::<f64>(&[7], &scans),
            Err(ClusterError::MemberOutOfRange { index: 7, .. })
        ));
    }

    #[test]
    fn visits_split_on_gaps() {
        let cfg = Config::default();
        let aps = [(1, -50)];
        let times = [0, 300, 600, 900, 5000, 5300];
        let scans = list(times.iter().map(|&t| scan(t, &aps)).collect());
        let visits = split_visits(&[0, 1, 2, 3, 4, 5], &scans, &cfg);
        assert_eq!(visits, vec![Visit { arrive: 0, depart: 1200 }, Visit { arrive: 5000, depart: 5600 }]);
    }

    #[test]
    fn revisit_matching() {
        let cfg = Config::default();
        let a = Fingerprint::from_entries([(mac(1), -50.0), (mac(2), -60.0)]);
        let b = Fingerprint::from_entries([(mac(5), -50.0), (mac(6), -60.0)]);
        let known = vec![(4, a.clone()), (7, a.clone()), (9, b.clone())];
        assert_eq!(match_revisit(&a, &known, &cfg), Some(4));
        assert_eq!(match_revisit(&b, &known, &cfg), Some(9));
        let other = Fingerprint::from_entries([(mac(99), -50.0)]);
        assert_eq!(match_revisit(&other, &known, &cfg), None);
        // order of the stored list does not matter for the tie-break
        let reversed = vec![(7, a.clone()), (4, a.clone())];
        assert_eq!(match_revisit(&a, &reversed, &cfg), Some(4));
    }
}
