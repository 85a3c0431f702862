use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use wifitrace::model::Config;

macro_rules! overrides {
    ($($field:ident: $ty:ty),* $(,)?) => {
        /// One optional flag per [`Config`] field.
        #[derive(Args, Debug, Default, Clone)]
        #[command(next_help_heading = "Config overrides")]
        pub struct ConfigOverrides {
            $(
                #[arg(long, global = true)]
                pub $field: Option<$ty>,
            )*
        }

        impl ConfigOverrides {
            pub fn apply(&self, cfg: &mut Config) {
                $(
                    if let Some(v) = self.$field {
                        cfg.$field = v;
                    }
                )*
            }
        }
    };
}

overrides! {
    scan_interval_s: i64,
    min_dwell_s: i64,
    min_pts_poi: usize,
    ap_low_count: usize,
    eps_low: f64,
    eps_high: f64,
    louvain_partition_threshold: f64,
    micromobility_eps: f64,
    min_pts_micro: usize,
    gps_accuracy_max_m: f64,
    heatmap_cell_m: f64,
    stay_radius_m: f64,
    geo_eps_m: f64,
    geo_min_pts: usize,
    max_speed_mps: f64,
    gps_accuracy_filter_m: f64,
    micro_time_tolerance_s: i64,
    max_batch_hours: i64,
    tz_offset_s: i64,
}

#[derive(Parser, Debug)]
#[command(name = "wifitrace", version, about = "Mine POIs, neighborhood activity and paths from GPS + WiFi traces")]
pub struct Cli {
    /// TOML config file; flags override it, it overrides the defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Record per-stage wall-clock timings in manifest.json.
    #[arg(long, global = true)]
    pub record_timings: bool,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Epoch seconds or an RFC 3339 timestamp.
pub fn parse_time(s: &str) -> Result<i64, String> {
    if let Ok(t) = s.parse::<i64>() {
        return Ok(t);
    }
    chrono::DateTime::parse_from_rfc3339(s)
        .map(|d| d.timestamp())
        .map_err(|e| format!("expected epoch seconds or RFC 3339 time: {e}"))
}

#[derive(Args, Debug, Clone)]
pub struct WindowArgs {
    /// Window start (inclusive).
    #[arg(long, value_parser = parse_time)]
    pub from: Option<i64>,
    /// Window end (inclusive).
    #[arg(long, value_parser = parse_time)]
    pub to: Option<i64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate `.mtrace.gz` batches and append them to a store.
    Ingest {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        store: PathBuf,
        /// Exit 0 even when some lines were rejected.
        #[arg(long)]
        tolerate_rejects: bool,
    },
    /// Indoor POIs and their visits per GPS stay region.
    Poi {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        user: String,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Home, neighborhood POIs and a heatmap of moving points.
    Neighborhood {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        user: String,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simplified travel paths and a similarity-threshold sweep.
    Micro {
        #[arg(long)]
        store: PathBuf,
        /// Comma-separated users; all users in the store when omitted.
        #[arg(long, value_delimiter = ',')]
        users: Vec<String>,
        #[command(flatten)]
        window: WindowArgs,
        /// Thresholds for the sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.2, 0.25, 0.3, 0.4])]
        eps: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Communities of similar POIs across users.
    Communities {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, value_delimiter = ',')]
        users: Vec<String>,
        #[command(flatten)]
        window: WindowArgs,
        /// Only POIs whose stay region lies within `lat,lon,radius_m`.
        #[arg(long)]
        region: Option<String>,
        /// Edge threshold; defaults to `louvain_partition_threshold`.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic batches with a ground-truth sidecar.
    Synth {
        /// Built-in world and scenario.
        #[arg(long, conflicts_with = "setup", required_unless_present = "setup")]
        preset: Option<String>,
        /// TOML document with `[world]` and `[scenario]` tables.
        #[arg(long)]
        setup: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}
