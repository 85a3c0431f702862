use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Every tunable of the pipelines. Loaded from TOML, missing keys take the
/// defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// WiFi sampling period.
    pub scan_interval_s: i64,
    /// Minimum dwell for a stay (GPS or WiFi).
    pub min_dwell_s: i64,
    /// DBSCAN density for indoor POI extraction.
    pub min_pts_poi: usize,
    /// AP count at or below which the low similarity threshold applies.
    pub ap_low_count: usize,
    pub eps_low: f64,
    pub eps_high: f64,
    /// Minimum similarity for an edge in the cross-user POI graph.
    pub louvain_partition_threshold: f64,
    /// Fixed similarity threshold for trajectory clustering.
    pub micromobility_eps: f64,
    pub min_pts_micro: usize,
    /// Accuracy at or below which a fix counts as "high accuracy".
    pub gps_accuracy_max_m: f64,
    pub heatmap_cell_m: f64,
    pub stay_radius_m: f64,
    pub geo_eps_m: f64,
    pub geo_min_pts: usize,
    /// Implied speed above which a fix is treated as a jump.
    pub max_speed_mps: f64,
    /// Fixes with a worse accuracy are discarded during cleaning.
    pub gps_accuracy_filter_m: f64,
    /// Largest scan-to-fix time skew used by trajectory error statistics.
    pub micro_time_tolerance_s: i64,
    pub max_batch_hours: i64,
    /// Local time offset used when printing dates and clock times.
    pub tz_offset_s: i64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            scan_interval_s: 300,
            min_dwell_s: 1200,
            min_pts_poi: 4,
            ap_low_count: 35,
            eps_low: 0.4,
            eps_high: 0.6,
            louvain_partition_threshold: 0.5,
            micromobility_eps: 0.3,
            min_pts_micro: 1,
            gps_accuracy_max_m: 25.0,
            heatmap_cell_m: 25.0,
            stay_radius_m: 200.0,
            geo_eps_m: 50.0,
            geo_min_pts: 1,
            max_speed_mps: 50.0,
            gps_accuracy_filter_m: 50.0,
            micro_time_tolerance_s: 150,
            max_batch_hours: 6,
            tz_offset_s: 0,
        }
    }
}

fn unit_interval(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid { field, reason: format!("{value} not in (0, 1]") })
    }
}

fn positive(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid { field, reason: format!("{value} must be positive") })
    }
}

fn at_least_one(field: &'static str, value: usize) -> Result<(), ConfigError> {
    if value >= 1 {
        Ok(())
    } else {
        Err(ConfigError::Invalid { field, reason: "must be at least 1".into() })
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        unit_interval("eps_low", self.eps_low)?;
        unit_interval("eps_high", self.eps_high)?;
        unit_interval("louvain_partition_threshold", self.louvain_partition_threshold)?;
        unit_interval("micromobility_eps", self.micromobility_eps)?;
        if self.eps_low > self.eps_high {
            return Err(ConfigError::Invalid {
                field: "eps_low",
                reason: format!("eps_low {} exceeds eps_high {}", self.eps_low, self.eps_high),
            });
        }
        at_least_one("min_pts_poi", self.min_pts_poi)?;
        at_least_one("min_pts_micro", self.min_pts_micro)?;
        at_least_one("geo_min_pts", self.geo_min_pts)?;
        positive("scan_interval_s", self.scan_interval_s as f64)?;
        positive("min_dwell_s", self.min_dwell_s as f64)?;
        positive("gps_accuracy_max_m", self.gps_accuracy_max_m)?;
        positive("heatmap_cell_m", self.heatmap_cell_m)?;
        positive("stay_radius_m", self.stay_radius_m)?;
        positive("geo_eps_m", self.geo_eps_m)?;
        positive("max_speed_mps", self.max_speed_mps)?;
        positive("gps_accuracy_filter_m", self.gps_accuracy_filter_m)?;
        positive("max_batch_hours", self.max_batch_hours as f64)?;
        if self.micro_time_tolerance_s < 0 {
            return Err(ConfigError::Invalid {
                field: "micro_time_tolerance_s",
                reason: "must not be negative".into(),
            });
        }
        Ok(())
    }

    /// Gap between consecutive member scans that starts a new visit.
    pub fn visit_gap_s(&self) -> i64 {
        2 * self.scan_interval_s
    }

    /// Search window, either side of a scan, for a fix that geolocates a
    /// WiFi-only place.
    pub fn neighborhood_fix_window_s(&self) -> i64 {
        2 * self.scan_interval_s
    }

    /// Same config with both adaptive thresholds pinned to `eps`.
    pub fn with_fixed_threshold(&self, eps: f64) -> Self {
        Self { eps_low: eps, eps_high: eps, ..self.clone() }
    }
}
