//! Ready-made worlds and schedules. Coordinates are laid out in meters
//! around a fixed origin; every schedule keeps place changes between scan
//! ticks so no scan falls inside a short in-building move.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AccessPoint, Agent, Cover, Place, Scenario, Segment, Walkway, World};
use crate::geo::LocalFrame;
use crate::model::{LatLon, MacAddr};

/// 2020-08-01T00:00:00Z.
pub const EPOCH: i64 = 1_596_240_000;
pub const ORIGIN: LatLon = LatLon { lat: 1.345, lon: 103.953 };

const HOUR: i64 = 3600;
const DAY: i64 = 24 * HOUR;

struct Builder {
    frame: LocalFrame,
    world: World,
    next_mac: u64,
}

impl Builder {
    fn new() -> Self {
        Self { frame: LocalFrame::new(ORIGIN), world: World::new(ORIGIN), next_mac: 0x02_00_5e_00_00_00 }
    }

    fn ap(&mut self, east: f64, north: f64, floor: i32, tx_power: f64) {
        let p = self.frame.to_geo(east, north);
        let mac = MacAddr::from_u64(self.next_mac).expect("48-bit");
        self.next_mac += 1;
        self.world.aps.push(AccessPoint { mac, lat: p.lat, lon: p.lon, floor, tx_power });
    }

    /// `count` APs evenly spaced on a ring.
    fn ring(&mut self, center: (f64, f64), radius: f64, count: usize, floor: i32, tx_power: f64, turn: f64) {
        for k in 0..count {
            let a = std::f64::consts::TAU * (k as f64 + turn) / count as f64;
            self.ap(center.0 + radius * a.cos(), center.1 + radius * a.sin(), floor, tx_power);
        }
    }

    fn place(&mut self, label: &str, group: Option<&str>, at: (f64, f64), floor: i32, radius_m: f64, cover: Cover) {
        let p = self.frame.to_geo(at.0, at.1);
        self.world.places.push(Place {
            label: label.into(),
            group: group.map(str::to_string),
            lat: p.lat,
            lon: p.lon,
            floor,
            radius_m,
            cover,
        });
    }

    fn walkway(&mut self, label: &str, points: &[(f64, f64)], sheltered: Vec<[f64; 2]>) {
        let points = points
            .iter()
            .map(|&(e, n)| {
                let p = self.frame.to_geo(e, n);
                [p.lat, p.lon]
            })
            .collect();
        self.world.walkways.push(Walkway { label: label.into(), points, floor: 0, sheltered });
    }
}

fn stay(place: &str, start: i64, end: i64) -> Segment {
    Segment::Stay { place: place.into(), start, end }
}

fn travel(start: i64, end: i64, cover: Cover) -> Segment {
    Segment::Travel { start, end, cover }
}

fn scenario(agents: Vec<Agent>, rss_sigma_db: f64) -> Scenario {
    Scenario { start: EPOCH, gps_interval_s: 60, rss_sigma_db, gps: Default::default(), agents }
}

/// Consecutive stays at `places`, each `dwell` long, switching places
/// in a one-minute move placed just before a five-minute tick.
fn itinerary(places: &[&str], start: i64, dwell: i64) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut t = start;
    for (k, p) in places.iter().enumerate() {
        let end = t + dwell;
        if k + 1 < places.len() {
            segments.push(stay(p, t, end - 180));
            segments.push(travel(end - 180, end - 120, Cover::Indoor));
        } else {
            segments.push(stay(p, t, end));
        }
        t = end;
    }
    segments
}

/// One person in a café for an hour.
pub fn parked() -> (World, Scenario) {
    let mut b = Builder::new();
    b.place("cafe", None, (0.0, 0.0), 0, 2.0, Cover::Indoor);
    b.ring((0.0, 0.0), 4.0, 6, 0, -50.0, 0.0);
    b.ring((0.0, 0.0), 9.0, 6, 0, -45.0, 0.5);
    let agents = vec![Agent { user: "u01".into(), phase_s: 0, segments: vec![stay("cafe", 0, HOUR)] }];
    (b.world, scenario(agents, 4.0))
}

/// A flat in a dense block: about 30 APs audible, one resident at home
/// for `hours` hours, with scans and fixes both every five minutes.
pub fn busy_flat(hours: i64) -> (World, Scenario) {
    let mut b = Builder::new();
    b.place("flat", None, (0.0, 0.0), 6, 3.0, Cover::Indoor);
    b.ring((0.0, 0.0), 6.0, 10, 6, -50.0, 0.0);
    b.ring((0.0, 0.0), 10.0, 10, 5, -40.0, 0.3);
    b.ring((0.0, 0.0), 10.0, 10, 7, -40.0, 0.6);
    let agents = vec![Agent { user: "u01".into(), phase_s: 0, segments: vec![stay("flat", 0, hours * HOUR)] }];
    let mut s = scenario(agents, 4.0);
    s.gps_interval_s = 300;
    (b.world, s)
}

/// A flat with a living room and a bedroom 14 m apart. Each room has its
/// own weak APs; a shared group of stronger APs sits between them. Fewer
/// than 35 APs are audible, so the low adaptive threshold applies.
pub fn two_zone_home(rss_sigma_db: f64) -> (World, Scenario) {
    let mut b = Builder::new();
    let living = (0.0, 0.0);
    let bedroom = (14.0, 0.0);
    b.place("living", Some("home"), living, 0, 2.0, Cover::Indoor);
    b.place("bedroom", Some("home"), bedroom, 0, 2.0, Cover::Indoor);
    b.ring(living, 1.5, 12, 0, -68.0, 0.0);
    b.ring(bedroom, 1.5, 12, 0, -68.0, 0.0);
    for k in 0..10 {
        b.ap(7.0 + if k % 2 == 0 { -0.5 } else { 0.5 }, -6.75 + 1.5 * k as f64, 0, -45.0);
    }
    let mut segments = itinerary(&["living", "bedroom"], 0, 2 * HOUR);
    segments.extend(itinerary(&["living", "bedroom"], 4 * HOUR + 300, 2 * HOUR));
    let agents = vec![Agent { user: "u01".into(), phase_s: 0, segments }];
    (b.world, scenario(agents, rss_sigma_db))
}

/// A fourth-floor flat and the void deck at the foot of the next block,
/// about 25 m away. GPS is inflated at both, so GPS alone sees one place.
/// The schedule repeats for `days` days.
pub fn home_void_deck(days: i64) -> (World, Scenario) {
    let mut b = Builder::new();
    b.place("home", None, (0.0, 0.0), 4, 3.0, Cover::Indoor);
    b.place("void-deck", None, (25.0, 5.0), 0, 5.0, Cover::Sheltered);
    b.ring((0.0, 0.0), 5.0, 6, 4, -45.0, 0.0);
    b.ring((0.0, 0.0), 8.0, 5, 3, -45.0, 0.3);
    b.ring((0.0, 0.0), 8.0, 5, 5, -45.0, 0.7);
    b.ring((25.0, 5.0), 7.0, 8, 0, -50.0, 0.0);
    let mut segments = Vec::new();
    for d in 0..days {
        let t0 = d * DAY + 8 * HOUR;
        segments.push(stay("home", t0, t0 + 4 * HOUR - 180));
        segments.push(travel(t0 + 4 * HOUR - 180, t0 + 4 * HOUR - 120, Cover::Open));
        segments.push(stay("void-deck", t0 + 4 * HOUR - 120, t0 + 5 * HOUR - 180));
        segments.push(travel(t0 + 5 * HOUR - 180, t0 + 5 * HOUR - 120, Cover::Open));
        segments.push(stay("home", t0 + 5 * HOUR - 120, t0 + 12 * HOUR));
    }
    let agents = vec![Agent { user: "u01".into(), phase_s: 0, segments }];
    (b.world, scenario(agents, 4.0))
}

/// Label of the shop visited on every day of [`mall_revisit`].
pub const REVISITED_SHOP: &str = "shop-1";

/// Six shops on a 25 m ring inside one mall, 40 APs each. `shop-1` is
/// visited on each of three days, every other shop once.
pub fn mall_revisit(rss_sigma_db: f64) -> (World, Scenario) {
    let mut b = Builder::new();
    for k in 0..6 {
        let a = std::f64::consts::TAU * k as f64 / 6.0;
        let at = (25.0 * a.cos(), 25.0 * a.sin());
        b.place(&format!("shop-{}", k + 1), None, at, 0, 3.0, Cover::Indoor);
        b.ring(at, 2.0, 20, 0, -60.0, 0.0);
        b.ring(at, 4.5, 20, 0, -60.0, 0.5);
    }
    let days: [&[&str]; 3] = [&["shop-1", "shop-2", "shop-3"], &["shop-4", "shop-1", "shop-5"], &["shop-6", "shop-1"]];
    let mut segments = Vec::new();
    for (d, shops) in days.iter().enumerate() {
        segments.extend(itinerary(shops, d as i64 * DAY + 10 * HOUR, 45 * 60));
    }
    let agents = vec![Agent { user: "u01".into(), phase_s: 0, segments }];
    (b.world, scenario(agents, rss_sigma_db))
}

/// Corridor geometry shared by [`corridor`] builds.
pub const CORRIDOR_LENGTH_M: f64 = 1000.0;

/// `users` commuters walking a 1 km corridor, covered in places, between a
/// housing block and an office, twice a day for `days` days. The 150
/// corridor APs are scattered along it with random power; their layout,
/// departure times, walking speeds and clock phases all come from `seed`.
pub fn corridor(users: usize, days: i64, seed: u64) -> (World, Scenario) {
    let mut b = Builder::new();
    let home = (-30.0, 0.0);
    let office = (CORRIDOR_LENGTH_M + 30.0, 0.0);
    b.place("block", None, home, 0, 8.0, Cover::Indoor);
    b.place("office", None, office, 0, 8.0, Cover::Indoor);
    b.ring(home, 6.0, 8, 0, -50.0, 0.0);
    b.ring(office, 6.0, 8, 0, -50.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..150 {
        let east = rng.random_range(0.0..CORRIDOR_LENGTH_M);
        let north = rng.random_range(-10.0..10.0);
        let tx_power = rng.random_range(-65.0..-40.0);
        b.ap(east, north, 0, tx_power);
    }
    b.walkway("corridor", &[(0.0, 0.0), (CORRIDOR_LENGTH_M, 0.0)], vec![[150.0, 350.0], [600.0, 750.0]]);

    let mut agents = Vec::new();
    for u in 0..users {
        let phase_s = rng.random_range(0..300);
        let mut segments = Vec::new();
        for d in 0..days {
            let day = d * DAY;
            let leave = day + 8 * HOUR + rng.random_range(-1800..1800);
            let walk = (CORRIDOR_LENGTH_M / rng.random_range(1.1..1.5)) as i64;
            segments.push(stay("block", day + 6 * HOUR, leave - 30));
            segments.push(travel(leave - 30, leave, Cover::Open));
            segments.push(Segment::Walk { walkway: "corridor".into(), start: leave, end: leave + walk, reverse: false });
            segments.push(travel(leave + walk, leave + walk + 30, Cover::Open));
            let back = day + 18 * HOUR + rng.random_range(-1800..1800);
            let walk_back = (CORRIDOR_LENGTH_M / rng.random_range(1.1..1.5)) as i64;
            segments.push(stay("office", leave + walk + 30, back - 30));
            segments.push(travel(back - 30, back, Cover::Open));
            segments.push(Segment::Walk { walkway: "corridor".into(), start: back, end: back + walk_back, reverse: true });
            segments.push(travel(back + walk_back, back + walk_back + 30, Cover::Open));
            segments.push(stay("block", back + walk_back + 30, day + 22 * HOUR));
        }
        agents.push(Agent { user: format!("u{:02}", u + 1), phase_s, segments });
    }
    (b.world, scenario(agents, 4.0))
}

/// Names accepted by [`by_name`].
pub const NAMES: &[&str] = &["parked", "busy-flat", "two-zone-home", "home-void-deck", "mall-revisit", "corridor"];

/// Preset lookup for the command line; `seed` feeds presets whose schedule
/// is randomised.
pub fn by_name(name: &str, seed: u64) -> Option<(World, Scenario)> {
    Some(match name {
        "parked" => parked(),
        "busy-flat" => busy_flat(6),
        "two-zone-home" => two_zone_home(6.0),
        "home-void-deck" => home_void_deck(3),
        "mall-revisit" => mall_revisit(4.0),
        "corridor" => corridor(5, 3, seed),
        _ => return None,
    })
}
