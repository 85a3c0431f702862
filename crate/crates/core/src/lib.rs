//! Mining of indoor points of interest, neighborhood activity and
//! micro-mobility paths from fused GPS and WiFi scan traces.
//!
//! The numeric core (fingerprints, similarity, POI clustering, community
//! detection) is generic over [`Scalar`]; the aliases at the crate root fix
//! it to `f64`, with `F32` variants for memory-constrained use.

pub mod community;
pub mod dbscan;
pub mod fusion;
pub mod geo;
pub mod ingest;
pub mod gps_pipeline;
pub mod micromobility;
pub mod model;
pub mod scalar;
pub mod similarity;
pub mod synth;
pub mod wifi_cluster;

pub use scalar::Scalar;

pub type Fingerprint = model::Fingerprint<f64>;
pub type FingerprintF32 = model::Fingerprint<f32>;
pub type PoiCluster = model::PoiCluster<f64>;
pub type SimilarityScore = similarity::SimilarityScore<f64>;
pub type AdaptiveThreshold = similarity::AdaptiveThreshold<f64>;
pub type ClusterRun = wifi_cluster::ClusterRun<f64>;
