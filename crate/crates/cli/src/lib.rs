//! Command implementations behind the `wifitrace` binary.
//!
//! Outputs and their columns:
//!
//! | command | files |
//! |---|---|
//! | `poi` | `pois.csv` (`region,poi_id,date,start_time,end_time,dwell_s`), `pois.geojson` |
//! | `neighborhood` | `neighborhood.geojson` |
//! | `micro` | `paths.geojson`, `sweep.csv` (`eps,cluster_count,avg_distance_error_m`) |
//! | `communities` | `communities.csv` (`user,region,poi_id,community`) |
//!
//! Each command also writes `manifest.json`; CSV files start with a
//! `# manifest sha256:<digest>` line and GeoJSON collections carry the same
//! value in a top-level `manifest` member.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod output;

use std::path::Path;

use wifitrace::model::Config;

pub use commands::{cmd_communities, cmd_ingest, cmd_micro, cmd_neighborhood, cmd_poi, cmd_synth, RunOptions, SynthSource, Window};
pub use error::CliError;

/// Defaults, then the config file, then flag overrides; validated.
pub fn resolve_config(file: Option<&Path>, overrides: &args::ConfigOverrides) -> Result<Config, CliError> {
    let mut cfg = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Config::from_toml_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
        }
        None => Config::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}
