//! Flat `dotted.key = value` configuration.
//!
//! Precedence: command-line flags, then the config file (`--config` or the
//! `BFCR_CONFIG` environment variable), then built-in defaults.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::anomaly::{DetectionConfig, GuardParams, Sidedness, VolParams};
use crate::error::{BfcrError, Result};
use crate::trend::TrendConfig;

pub const CONFIG_ENV: &str = "BFCR_CONFIG";

pub const KEYS: &[&str] = &[
    "fc.d",
    "fc.c_fc",
    "fc.z",
    "fc.e",
    "fc.n_over",
    "fc.shape",
    "filter.cutoff_fraction",
    "filter.power",
    "detect.k_sigma",
    "detect.min_points",
    "detect.internal_sided",
    "detect.edge_sided",
    "detect.screen_internal",
    "guards.min_pct_change",
    "guards.cov_window",
    "guards.cov_threshold",
    "vol.ratio_low",
    "vol.ratio_high",
    "vol.trim_fraction",
    "vol.min_remaining_fraction",
];

/// Every tunable of a command run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunConfig {
    pub trend: TrendConfig,
    pub detect: DetectionConfig,
    pub guards: GuardParams,
    pub vol: VolParams,
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "fc.d" => self.trend.fc.d = parse(key, value)?,
            "fc.c_fc" => self.trend.fc.c_fc = parse(key, value)?,
            "fc.z" => self.trend.fc.z = parse(key, value)?,
            "fc.e" => self.trend.fc.e = parse(key, value)?,
            "fc.n_over" => self.trend.fc.n_over = parse(key, value)?,
            "fc.shape" => self.trend.brace = value.parse()?,
            "filter.cutoff_fraction" => self.trend.filter.cutoff_fraction = parse(key, value)?,
            "filter.power" => self.trend.filter.power = parse(key, value)?,
            "detect.k_sigma" => self.detect.k_sigma = parse(key, value)?,
            "detect.min_points" => self.detect.min_points = parse(key, value)?,
            "detect.internal_sided" => self.detect.internal_sided = value.parse::<Sidedness>()?,
            "detect.edge_sided" => self.detect.edge_sided = value.parse::<Sidedness>()?,
            "detect.screen_internal" => self.detect.screen_internal = parse(key, value)?,
            "guards.min_pct_change" => self.guards.min_pct_change = parse(key, value)?,
            "guards.cov_window" => self.guards.cov_window = parse(key, value)?,
            "guards.cov_threshold" => self.guards.cov_threshold = parse(key, value)?,
            "vol.ratio_low" => self.vol.ratio_low = parse(key, value)?,
            "vol.ratio_high" => self.vol.ratio_high = parse(key, value)?,
            "vol.trim_fraction" => self.vol.trim_fraction = parse(key, value)?,
            "vol.min_remaining_fraction" => self.vol.min_remaining_fraction = parse(key, value)?,
            other => {
                return Err(BfcrError::InvalidParams(format!(
                    "unknown configuration key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Applies a `KEY=VALUE` assignment as given on the command line.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            BfcrError::InvalidParams(format!("expected KEY=VALUE, got {assignment:?}"))
        })?;
        self.set(key, value)
    }

    /// Applies every setting of a config file's text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| BfcrError::Parse {
                line: i as u64 + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(key, value).map_err(|e| BfcrError::Parse {
                line: i as u64 + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        self.apply_text(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.trend.validate()?;
        self.detect.validate()?;
        self.guards.validate()?;
        self.vol.validate()
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| BfcrError::InvalidParams(format!("{key} = {value:?}: {e}")))
}
