//! Spherical distance and small-area planar projection helpers.

use crate::model::{GpsPoint, LatLon};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Great-circle distance in meters.
pub fn haversine_m(a: LatLon, b: LatLon) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

pub fn fix_distance_m(a: &GpsPoint, b: &GpsPoint) -> f64 {
    haversine_m(a.position(), b.position())
}

/// Arithmetic mean of coordinates; `None` for an empty input.
pub fn mean_position(points: impl IntoIterator<Item = LatLon>) -> Option<LatLon> {
    let mut n = 0usize;
    let (mut lat, mut lon) = (0.0, 0.0);
    for p in points {
        lat += p.lat;
        lon += p.lon;
        n += 1;
    }
    (n > 0).then(|| LatLon::new(lat / n as f64, lon / n as f64))
}

/// Equirectangular projection around a reference latitude, in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFrame {
    pub origin: LatLon,
    meters_per_deg_lat: f64,
    meters_per_deg_lon: f64,
}

impl LocalFrame {
    pub fn new(origin: LatLon) -> Self {
        let meters_per_deg_lat = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        Self {
            origin,
            meters_per_deg_lat,
            meters_per_deg_lon: meters_per_deg_lat * origin.lat.to_radians().cos(),
        }
    }

    /// `(east, north)` meters of `p` relative to the origin.
    pub fn to_local(&self, p: LatLon) -> (f64, f64) {
        (
            (p.lon - self.origin.lon) * self.meters_per_deg_lon,
            (p.lat - self.origin.lat) * self.meters_per_deg_lat,
        )
    }

    pub fn to_geo(&self, east: f64, north: f64) -> LatLon {
        LatLon::new(
            self.origin.lat + north / self.meters_per_deg_lat,
            self.origin.lon + east / self.meters_per_deg_lon,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_degree_of_latitude() {
        let d = haversine_m(LatLon::new(0.0, 0.0), LatLon::new(1.0, 0.0));
        assert!((d - 111_194.93).abs() < 0.1, "{d}");
    }

    #[test]
    fn zero_and_symmetric() {
        let a = LatLon::new(1.3521, 103.8198);
        let b = LatLon::new(1.3400, 103.9500);
        assert_eq!(haversine_m(a, a), 0.0);
        assert_eq!(haversine_m(a, b), haversine_m(b, a));
    }

    #[test]
    fn local_frame_round_trip_and_scale() {
        let frame = LocalFrame::new(LatLon::new(1.345, 103.953));
        let p = frame.to_geo(120.0, -80.0);
        let (e, n) = frame.to_local(p);
        assert!((e - 120.0).abs() < 1e-6 && (n + 80.0).abs() < 1e-6);
        let d = haversine_m(frame.origin, p);
        assert!((d - (120.0f64.hypot(80.0))).abs() < 0.05, "{d}");
    }
}
