//! CSV and GeoJSON writers. Every file is written through a temporary name
//! and renamed into place.

use std::path::Path;

use serde_json::{json, Map, Value};
use wifitrace::ingest::write_atomic;
use wifitrace::model::LatLon;

use crate::error::CliError;

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| CliError::io(path, e))
}

/// CSV text whose first line is a `# manifest sha256:<digest>` comment.
pub fn csv_text(digest: &str, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8");
    format!("# manifest sha256:{digest}\n{body}")
}

pub fn point(p: Option<LatLon>) -> Value {
    match p {
        Some(p) => json!({ "type": "Point", "coordinates": [p.lon, p.lat] }),
        None => Value::Null,
    }
}

pub fn polygon(ring: &[LatLon]) -> Value {
    let coords: Vec<Value> = ring.iter().map(|p| json!([p.lon, p.lat])).collect();
    json!({ "type": "Polygon", "coordinates": [coords] })
}

pub fn feature(geometry: Value, properties: Map<String, Value>) -> Value {
    json!({ "type": "Feature", "geometry": geometry, "properties": properties })
}

pub fn collection_text(digest: &str, features: Vec<Value>) -> String {
    let fc = json!({ "type": "FeatureCollection", "manifest": format!("sha256:{digest}"), "features": features });
    let mut text = serde_json::to_string_pretty(&fc).expect("geojson serializes");
    text.push('\n');
    text
}

/// Property map from `(key, value)` pairs.
pub fn props<const N: usize>(pairs: [(&str, Value); N]) -> Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
