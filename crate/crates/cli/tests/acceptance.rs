//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as RunnerConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wifitrace::community::{louvain_weighted, modularity, pairwise_count, WeightedGraph};
use wifitrace::fusion::{build_heatmap, extract_neighborhood, identify_home, region_pois, stay_regions};
use wifitrace::gps_pipeline::{clean_track, extract_stay_points};
use wifitrace::ingest::{decode_batch, encode_batch, ingest_batch, Batch, Record, Store};
use wifitrace::micromobility::{extract_travel_windows, representative_of, sweep_threshold, RepresentativeMode, Trajectory};
use wifitrace::model::{ApObservation, Config, GpsPoint, MacAddr, ScanList, ScanResult};
use wifitrace::similarity::{cosine_similarity, AdaptiveThreshold};
use wifitrace::synth::{presets, simulate, Simulation};
use wifitrace::wifi_cluster::{extract_poi, extract_poi_with};
use wifitrace::Fingerprint;
use wifitrace_cli::{cmd_ingest, cmd_micro, cmd_neighborhood, cmd_poi, RunOptions, Window};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// Independent evaluation of the fingerprint cosine: Y over common MACs,
// d1 and d2 over each fingerprint, C = Y / (sqrt(d1) * sqrt(d2)).
fn naive_cosine(a: &HashMap<u64, f64>, b: &HashMap<u64, f64>) -> f64 {
    let mut y = 0.0;
    for (mac, r1) in a {
        if let Some(r2) = b.get(mac) {
            y += r1 * r2;
        }
    }
    let d1: f64 = a.values().map(|r| r * r).sum();
    let d2: f64 = b.values().map(|r| r * r).sum();
    y / (d1.sqrt() * d2.sqrt())
}

fn random_fingerprint(rng: &mut ChaCha8Rng, pool: std::ops::Range<u64>, size: usize) -> Vec<(u64, f64)> {
    let mut macs = BTreeSet::new();
    while macs.len() < size.min((pool.end - pool.start) as usize) {
        macs.insert(rng.random_range(pool.clone()));
    }
    macs.into_iter().map(|m| (m, rng.random_range(-119.0..-1.0))).collect()
}

fn fp(entries: &[(u64, f64)]) -> Fingerprint {
    Fingerprint::from_entries(entries.iter().map(|&(m, r)| (MacAddr::from_u64(m).unwrap(), r)))
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut lib_time = std::time::Duration::ZERO;
    let (mut worst, mut disjoint, mut identical) = (0.0f64, 0usize, 0usize);
    for k in 0..100_000 {
        let size_a = rng.random_range(1..60);
        let size_b = rng.random_range(1..60);
        let a = random_fingerprint(&mut rng, 0..120, size_a);
        let b = match k % 5 {
            0 => a.clone(),
            1 => random_fingerprint(&mut rng, 1000..1200, size_b),
            _ => random_fingerprint(&mut rng, 0..120, size_b),
        };
        let (fa, fb) = (fp(&a), fp(&b));
        let started = Instant::now();
        let c_ab = cosine_similarity(&fa, &fb).map_err(|e| e.to_string())?.value();
        lib_time += started.elapsed();
        let c_ba = cosine_similarity(&fb, &fa).map_err(|e| e.to_string())?.value();
        if c_ab.to_bits() != c_ba.to_bits() {
            return Err(format!("asymmetric at pair {k}: {c_ab} vs {c_ba}"));
        }
        let oracle = naive_cosine(&a.iter().copied().collect(), &b.iter().copied().collect());
        worst = worst.max((c_ab - oracle).abs());
        match k % 5 {
            0 if c_ab != 1.0 => return Err(format!("identical pair {k} scored {c_ab}")),
            0 => identical += 1,
            1 if c_ab != 0.0 => return Err(format!("disjoint pair {k} scored {c_ab}")),
            1 => disjoint += 1,
            _ => {}
        }
    }
    let secs = lib_time.as_secs_f64();
    check(
        worst <= 1e-12 && secs < 10.0,
        format!("1e5 pairs, max |lib - naive| = {worst:.2e}, {identical} identical = 1, {disjoint} disjoint = 0, library time {secs:.2} s"),
    )
}

/// Scans drawn from a few rooms with their own AP pools; sizes straddle the
/// low AP count so both thresholds are exercised.
fn random_scan_list(rng: &mut ChaCha8Rng, n: usize) -> ScanList {
    let rooms = rng.random_range(1..6u64);
    let scans = (0..n)
        .map(|k| {
            let room = rng.random_range(0..rooms);
            let size = rng.random_range(0..60usize);
            let mut obs = Vec::new();
            for _ in 0..size {
                let pool = if rng.random_bool(0.1) { rng.random_range(0..rooms) } else { room };
                let mac = MacAddr::from_u64(pool * 100 + rng.random_range(0..70)).unwrap();
                obs.push(ApObservation { mac, rss: rng.random_range(-100..-30) });
            }
            ScanResult::new(k as i64 * 300, obs).unwrap()
        })
        .collect();
    ScanList::new("u", scans)
}

/// Brute-force DBSCAN: full neighbour matrix, core flags, components of
/// cores grown in index order, border points to the first component that
/// reaches them.
fn reference_dbscan(scans: &ScanList, cfg: &Config) -> Vec<Option<usize>> {
    let n = scans.len();
    let maps: Vec<HashMap<u64, f64>> =
        scans.scans().iter().map(|s| s.observations().iter().map(|o| (o.mac.as_u64(), f64::from(o.rss))).collect()).collect();
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            adj[i][j] = if maps[i].is_empty() || maps[j].is_empty() {
                i == j
            } else {
                let eps = if maps[i].len() <= cfg.ap_low_count && maps[j].len() <= cfg.ap_low_count { cfg.eps_low } else { cfg.eps_high };
                naive_cosine(&maps[i], &maps[j]) >= eps
            };
        }
    }
    let core: Vec<bool> = adj.iter().map(|row| row.iter().filter(|&&x| x).count() >= cfg.min_pts_poi).collect();
    let mut label = vec![None; n];
    let mut next = 0;
    for s in 0..n {
        if !core[s] || label[s].is_some() {
            continue;
        }
        let mut frontier = vec![s];
        label[s] = Some(next);
        while let Some(i) = frontier.pop() {
            for j in 0..n {
                if adj[i][j] && core[j] && label[j].is_none() {
                    label[j] = Some(next);
                    frontier.push(j);
                }
            }
        }
        next += 1;
    }
    (0..n)
        .map(|i| if core[i] { label[i] } else { (0..n).filter(|&j| core[j] && adj[j][i]).filter_map(|j| label[j]).min() })
        .collect()
}

fn equal_up_to_relabel(a: &[Option<usize>], b: &[Option<usize>]) -> bool {
    let (mut fwd, mut back) = (HashMap::new(), HashMap::new());
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| match (x, y) {
            (None, None) => true,
            (Some(x), Some(y)) => *fwd.entry(*x).or_insert(*y) == *y && *back.entry(*y).or_insert(*x) == *x,
            _ => false,
        })
}

fn criterion_2() -> Outcome {
    let cfg = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut clusters, mut noise) = (0usize, 0usize);
    for k in 0..500 {
        let n = rng.random_range(0..=200);
        let scans = random_scan_list(&mut rng, n);
        let run = extract_poi::<f64>(&scans, &cfg);
        if !equal_up_to_relabel(&run.assignment(), &reference_dbscan(&scans, &cfg)) {
            return Err(format!("instance {k} ({n} scans) differs from reference"));
        }
        if run.similarity_evaluations > n * n {
            return Err(format!("instance {k}: {} similarity evaluations for {n} scans", run.similarity_evaluations));
        }
        clusters += run.clusters.len();
        noise += run.noise.len();
    }
    Ok(format!("500/500 instances match, evaluations <= n^2 ({clusters} clusters, {noise} noise scans in total)"))
}

fn criterion_3() -> Outcome {
    let cfg = Config::default();
    let (world, scenario) = presets::two_zone_home(6.0);
    let fixed = AdaptiveThreshold::fixed(0.5);
    let mut good = 0;
    let mut max_aps = 0;
    for seed in 0..100 {
        let sim = simulate(&world, &scenario, &cfg, seed).map_err(|e| e.to_string())?;
        let scans = &sim.users[0].scans;
        max_aps = max_aps.max(scans.scans().iter().map(ScanResult::ap_count).max().unwrap_or(0));
        let adaptive = extract_poi::<f64>(scans, &cfg).clusters.len();
        let fixed = extract_poi_with::<f64>(scans, &fixed, cfg.min_pts_poi, &cfg).clusters.len();
        if adaptive == 1 && fixed >= 2 {
            good += 1;
        }
    }
    check(
        good >= 95 && world.aps.len() < 35,
        format!("{good}/100 seeds give 1 POI adaptive and >= 2 at 0.5 ({} APs in the home, <= {max_aps} per scan)", world.aps.len()),
    )
}

fn criterion_4() -> Outcome {
    let cfg = Config::default();
    let (world, scenario) = presets::mall_revisit(4.0);
    for seed in 0..50 {
        let sim = simulate(&world, &scenario, &cfg, seed).map_err(|e| e.to_string())?;
        let u = &sim.users[0];
        let regions = region_pois(&u.track, &u.scans, &cfg);
        // poi id per original scan index, scoped by region
        let mut poi_of = vec![None; u.scans.len()];
        for r in &regions {
            for c in &r.run.clusters {
                for &m in &c.member_indices {
                    poi_of[r.original_index(m)] = Some((r.region.cluster_id, c.poi_id));
                }
            }
        }
        let mut ids_per_visit: Vec<(String, BTreeSet<(usize, u32)>)> = Vec::new();
        for v in &u.visits {
            let ids: BTreeSet<_> =
                u.scans.scans().iter().enumerate().filter(|(_, s)| (v.arrive..v.depart).contains(&s.timestamp())).filter_map(|(i, _)| poi_of[i]).collect();
            if ids.len() != 1 {
                return Err(format!("seed {seed}: visit to {} at {} mapped to {ids:?}", v.place, v.arrive));
            }
            ids_per_visit.push((v.place.clone(), ids));
        }
        let revisit: BTreeSet<_> = ids_per_visit.iter().filter(|(p, _)| p == presets::REVISITED_SHOP).flat_map(|(_, ids)| ids.iter().copied()).collect();
        let others: Vec<_> = ids_per_visit.iter().filter(|(p, _)| p != presets::REVISITED_SHOP).flat_map(|(_, ids)| ids.iter().copied()).collect();
        let distinct_others: BTreeSet<_> = others.iter().copied().collect();
        let visits_to_revisit = ids_per_visit.iter().filter(|(p, _)| p == presets::REVISITED_SHOP).count();
        if visits_to_revisit != 3 || revisit.len() != 1 || distinct_others.len() != 5 || others.len() != 5 || distinct_others.iter().any(|id| revisit.contains(id)) {
            return Err(format!("seed {seed}: revisit ids {revisit:?}, other ids {others:?}"));
        }
    }
    Ok("50/50 seeds: 3 visits share one poi_id, 5 other places get distinct ids".into())
}

fn criterion_5() -> Outcome {
    let at_41 = pairwise_count(41).map_err(|e| e.to_string())?;
    if at_41 != 820 {
        return Err(format!("pairwise_count(41) = {at_41}"));
    }
    for h in 2..=10_000u64 {
        let got = pairwise_count(h).map_err(|e| e.to_string())?;
        if got != h * (h - 1) / 2 {
            return Err(format!("pairwise_count({h}) = {got}"));
        }
    }
    Ok("pairwise_count(41) = 820; h(h-1)/2 for all h in [2, 10^4]".into())
}

fn direct_modularity(n: usize, edges: &[(usize, usize, f64)], comm: &[usize]) -> f64 {
    let mut a = vec![vec![0.0; n]; n];
    for &(i, j, w) in edges {
        a[i][j] += w;
        a[j][i] += w;
    }
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if comm[i] == comm[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut graphs = 0;
    let mut small = 0;
    for k in 0..600 {
        let n = if k < 400 { rng.random_range(1..=8) } else { rng.random_range(9..=60) };
        let p = rng.random_range(0.05..0.9);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    edges.push((i, j, rng.random_range(0.01..1.0)));
                }
            }
        }
        let g = WeightedGraph::new(n, edges.iter().copied()).map_err(|e| e.to_string())?;
        let part = louvain_weighted(&g);
        let q = direct_modularity(n, &edges, &part.communities);
        if (part.modularity - q).abs() > 1e-9 || (modularity(&g, &part.communities) - q).abs() > 1e-9 {
            return Err(format!("graph {k}: reported {} vs direct {q}", part.modularity));
        }
        graphs += 1;
        if n <= 8 {
            for v in 0..n {
                for target in 0..=n {
                    let mut moved = part.communities.clone();
                    moved[v] = target;
                    if direct_modularity(n, &edges, &moved) > q + 1e-9 {
                        return Err(format!("graph {k}: moving node {v} to {target} improves Q"));
                    }
                }
            }
            small += 1;
        }
    }
    let triangles = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0), (2, 3, 1.0)];
    let part = louvain_weighted(&WeightedGraph::new(6, triangles).map_err(|e| e.to_string())?);
    let planted = part.communities == vec![0, 0, 0, 1, 1, 1];
    check(
        planted,
        format!("Q matches direct evaluation on {graphs} graphs, {small} graphs <= 8 nodes single-move optimal, two triangles split {:?}", part.communities),
    )
}

fn criterion_7() -> Outcome {
    let cfg = Config::default();
    let (world, scenario) = presets::home_void_deck(1);
    for seed in 0..50 {
        let sim = simulate(&world, &scenario, &cfg, seed).map_err(|e| e.to_string())?;
        let u = &sim.users[0];
        let regions = stay_regions(&u.track, &cfg);
        let home = identify_home(&regions).map_err(|e| e.to_string())?;
        let report = extract_neighborhood(&u.track, &u.scans, home, (i64::MIN, i64::MAX), &cfg);
        let fused = report.fused_place_count();
        if regions.len() != 1 || fused != 2 {
            return Err(format!("seed {seed}: GPS places {}, fused places {fused}", regions.len()));
        }
        if report.heatmap.total() as usize != report.moving_points_total {
            return Err(format!("seed {seed}: heatmap {} vs {} moving points", report.heatmap.total(), report.moving_points_total));
        }
        // conservation on the raw track too, where nearly every fix lands in a cell
        let cleaned = clean_track(&u.track, &cfg);
        if build_heatmap(cleaned.points(), &cfg).total() as usize != cleaned.len() {
            return Err(format!("seed {seed}: heatmap lost fixes"));
        }
    }
    Ok("50/50 seeds: GPS-only 1 place, GPS+WiFi 2 places, heatmap totals conserved".into())
}

fn trajectories(sim: &Simulation, cfg: &Config) -> Vec<Trajectory> {
    sim.users
        .iter()
        .map(|u| {
            let cleaned = clean_track(&u.track, cfg);
            let stays = extract_stay_points(&cleaned, cfg);
            extract_travel_windows(&stays, &cleaned, &u.scans)
        })
        .collect()
}

fn criterion_8() -> Outcome {
    let cfg = Config::default();
    let grid = [0.2, 0.25, 0.3, 0.4];
    let (mut monotone, mut min_ratio, mut changed) = (0, f64::INFINITY, 0);
    for seed in 0..50 {
        let (world, scenario) = presets::corridor(5, 3, seed);
        let sim = simulate(&world, &scenario, &cfg, seed).map_err(|e| e.to_string())?;
        let trajs = trajectories(&sim, &cfg);
        let scans: usize = trajs.iter().map(|t| t.scans.len()).sum();
        let rows = sweep_threshold(&trajs, &grid, &cfg).map_err(|e| e.to_string())?;
        let counts: Vec<usize> = rows.iter().map(|r| r.cluster_count).collect();
        let errors: Vec<f64> = rows.iter().map(|r| r.avg_distance_error_m.unwrap_or(f64::NAN)).collect();
        if counts.windows(2).all(|w| w[0] <= w[1]) && errors.windows(2).all(|w| w[0] >= w[1]) {
            monotone += 1;
        }
        if counts[0] != counts[3] {
            changed += 1;
        }
        min_ratio = min_ratio.min(scans as f64 / counts[2] as f64);
    }
    check(
        monotone >= 48 && min_ratio >= 5.0,
        format!("{monotone}/50 seeds monotone ({changed} with a count change across the grid), min compression at 0.3 = {min_ratio:.1}x"),
    )
}

fn criterion_9() -> Outcome {
    let fix = |acc: f64, lat: f64, t: i64| GpsPoint::new(lat, 103.9, acc, t).unwrap();
    let (a, b, c) = (fix(10.0, 1.30, 0), fix(20.0, 1.31, 60), fix(40.0, 1.32, 120));
    let (rep, mode, used) = representative_of(&[a, b, c], 25.0).ok_or("no representative")?;
    let mean_ok = rep.lat == (a.lat + b.lat) / 2.0 && rep.lon == 103.9 && mode == RepresentativeMode::AveragedHighAccuracy && used == 2;
    let (d, e) = (fix(40.0, 1.40, 0), fix(60.0, 1.41, 60));
    let (rep2, mode2, _) = representative_of(&[e, d], 25.0).ok_or("no representative")?;
    let best_ok = rep2 == d && mode2 == RepresentativeMode::BestOfLowAccuracy;
    check(mean_ok && best_ok, format!("{{10,20,40}} -> lat {:.3} ({mode:?}); {{40,60}} -> {} m fix ({mode2:?})", rep.lat, rep2.accuracy))
}

fn batch_strategy() -> impl Strategy<Value = Batch> {
    (0i64..2_000_000_000, "[a-z0-9_]{1,10}").prop_flat_map(|(start, user)| {
        let scan = (0..21_600i64, prop::collection::vec((0u64..(1 << 48), -120i16..0), 0..35)).prop_map(move |(dt, aps)| {
            Record::Scan(ScanResult::new(start + dt, aps.into_iter().map(|(m, rss)| ApObservation { mac: MacAddr::from_u64(m).unwrap(), rss })).unwrap())
        });
        let fix = (0..21_600i64, -90.0..=90.0f64, -180.0..=180.0f64, 0.01..1000.0f64)
            .prop_map(move |(dt, lat, lon, acc)| Record::Fix(GpsPoint::new(lat, lon, acc, start + dt).unwrap()));
        prop::collection::vec(prop_oneof![scan, fix], 0..25).prop_map(move |mut records| {
            records.sort_by_key(Record::timestamp);
            Batch::new(user.clone(), start, start + 21_600, records)
        })
    })
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_10() -> Outcome {
    let mut runner = TestRunner::new(RunnerConfig { cases: 10_000, failure_persistence: None, ..RunnerConfig::default() });
    runner
        .run(&batch_strategy(), |b| {
            let bytes = encode_batch(&b);
            let back = decode_batch(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(&back, &b);
            prop_assert_eq!(encode_batch(&back), bytes);
            Ok(())
        })
        .map_err(|e| format!("round trip: {e}"))?;

    let cfg = Config::default();
    let (world, scenario) = presets::busy_flat(6);
    let sim = simulate(&world, &scenario, &cfg, 10).map_err(|e| e.to_string())?;
    let batches = sim.batches(scenario.start, cfg.max_batch_hours * 3600);
    if batches.len() != 1 {
        return Err(format!("expected one 6 h batch, got {}", batches.len()));
    }
    let raw = batches[0].to_text().len();
    let packed = encode_batch(&batches[0]);
    let ratio = raw as f64 / packed.len() as f64;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = Store::open(dir.path().join("store")).map_err(|e| e.to_string())?;
    let first = ingest_batch(&store, &packed, &cfg).map_err(|e| e.to_string())?;
    let before = snapshot(store.root());
    let second = ingest_batch(&store, &packed, &cfg).map_err(|e| e.to_string())?;
    let unchanged = snapshot(store.root()) == before && second.accepted == 0 && first.accepted == batches[0].records.len();
    check(
        unchanged && ratio >= 10.0,
        format!("10^4 batches byte-exact, re-ingest adds {} records (store unchanged: {unchanged}), 6 h batch {raw} -> {} B = {ratio:.1}x", second.accepted, packed.len()),
    )
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let opts = RunOptions::default();
    let mut paths = Vec::new();
    for (name, sim) in [
        ("home", {
            let (w, s) = presets::home_void_deck(2);
            simulate(&w, &s, &opts.config, 42).map_err(|e| e.to_string())?
        }),
        ("corridor", {
            let (w, s) = presets::corridor(3, 2, 42);
            simulate(&w, &s, &opts.config, 42).map_err(|e| e.to_string())?
        }),
    ] {
        let out = dir.path().join(name);
        paths.extend(sim.write(&out, presets::EPOCH, &opts.config).map_err(|e| e.to_string())?);
    }
    // the home user is u01 in both presets; keep them apart
    std::fs::remove_dir_all(dir.path().join("corridor")).map_err(|e| e.to_string())?;
    paths.retain(|p| p.starts_with(dir.path().join("home")));
    let store = dir.path().join("store");
    cmd_ingest(&paths, &store, &opts).map_err(|e| e.to_string())?;
    let run = |tag: &str| -> Result<BTreeMap<String, Vec<u8>>, String> {
        let out = dir.path().join(tag);
        cmd_poi(&store, "u01", Window::default(), &out.join("poi"), &opts).map_err(|e| e.to_string())?;
        cmd_neighborhood(&store, "u01", Window::default(), &out.join("neighborhood"), &opts).map_err(|e| e.to_string())?;
        cmd_micro(&store, &[], Window::default(), &[0.2, 0.25, 0.3, 0.4], &out.join("micro"), &opts).map_err(|e| e.to_string())?;
        Ok(snapshot(&out))
    };
    let (a, b) = (run("run-a")?, run("run-b")?);
    check(a == b && a.len() >= 7, format!("{} output files byte-identical across two runs", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("cosine similarity oracle", criterion_1),
        ("DBSCAN equivalence", criterion_2),
        ("adaptive vs fixed threshold at home", criterion_3),
        ("revisit keeps its poi_id", criterion_4),
        ("pairwise similarity count", criterion_5),
        ("Louvain soundness", criterion_6),
        ("fusion finds the void deck", criterion_7),
        ("micro-mobility trends", criterion_8),
        ("representative rule fixtures", criterion_9),
        ("ingest round trip and compression", criterion_10),
        ("end-to-end determinism", criterion_11),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1} s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1} s]", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
