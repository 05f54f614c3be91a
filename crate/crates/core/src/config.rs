//! Flat `key = value` run configuration.
//!
//! Unset keys keep their defaults, which reproduce the reference link: OPAs at
//! 1% of threshold, Γ_c/Γ = 0.5, lossless cavity couplings, 5 dB excess loss
//! per arm, 0.2 dB/km fiber and a 500 kHz trial rate. Lengths handed to
//! [`RunConfig::operating_point`] are total path `2L`; each arm gets half.

use std::fmt::Write as _;
use std::path::Path;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::loading::MemoryCavityParams;
use crate::metrics::OperatingPoint;
use crate::protocol_mc::TrialSchedule;
use crate::source::OpaParams;

/// Default OPA linewidth: 2π × 30 MHz.
pub const DEFAULT_OPA_LINEWIDTH: f64 = 2.0 * std::f64::consts::PI * 30e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    /// G², pump power over oscillation threshold.
    pub pump_fraction: f64,
    /// Γ, s⁻¹.
    pub opa_linewidth: f64,
    /// γ/Γ.
    pub opa_out_coupling_ratio: f64,
    /// Γ_c/Γ.
    pub memory_linewidth_ratio: f64,
    /// γ_c/Γ_c.
    pub memory_in_coupling_ratio: f64,
    pub excess_loss_db_per_arm: f64,
    pub fiber_loss_db_per_km: f64,
    pub trial_rate_hz: f64,
    pub slot_s: f64,
    pub load_s: f64,
    pub pump_s: f64,
    pub verify_s: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let schedule = TrialSchedule::default();
        Self {
            pump_fraction: 0.01,
            opa_linewidth: DEFAULT_OPA_LINEWIDTH,
            opa_out_coupling_ratio: 1.0,
            memory_linewidth_ratio: 0.5,
            memory_in_coupling_ratio: 1.0,
            excess_loss_db_per_arm: 5.0,
            fiber_loss_db_per_km: 0.2,
            trial_rate_hz: 500e3,
            slot_s: schedule.slot_s,
            load_s: schedule.load_s,
            pump_s: schedule.pump_s,
            verify_s: schedule.verify_s,
        }
    }
}

pub const KEYS: [&str; 12] = [
    "pump_fraction",
    "opa_linewidth",
    "opa_out_coupling_ratio",
    "memory_linewidth_ratio",
    "memory_in_coupling_ratio",
    "excess_loss_db_per_arm",
    "fiber_loss_db_per_km",
    "trial_rate_hz",
    "slot_s",
    "load_s",
    "pump_s",
    "verify_s",
];

fn config_error(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl RunConfig {
    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "pump_fraction" => &mut self.pump_fraction,
            "opa_linewidth" => &mut self.opa_linewidth,
            "opa_out_coupling_ratio" => &mut self.opa_out_coupling_ratio,
            "memory_linewidth_ratio" => &mut self.memory_linewidth_ratio,
            "memory_in_coupling_ratio" => &mut self.memory_in_coupling_ratio,
            "excess_loss_db_per_arm" => &mut self.excess_loss_db_per_arm,
            "fiber_loss_db_per_km" => &mut self.fiber_loss_db_per_km,
            "trial_rate_hz" => &mut self.trial_rate_hz,
            "slot_s" => &mut self.slot_s,
            "load_s" => &mut self.load_s,
            "pump_s" => &mut self.pump_s,
            "verify_s" => &mut self.verify_s,
            _ => return None,
        })
    }

    /// Sets one key from its textual value, without validating the whole config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parsed: f64 = value
            .trim()
            .parse()
            .map_err(|_| config_error(key, format!("`{}` is not a number", value.trim())))?;
        let slot = self.slot(key).ok_or_else(|| config_error(key, "unknown key"))?;
        *slot = parsed;
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| config_error(assignment, "override must look like key=value"))?;
        self.set(key.trim(), value)
    }

    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_error(line, format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key.trim(), value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |key: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(config_error(key, format!("{v} not in (0, 1)")))
            }
        };
        let ratio = |key: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(config_error(key, format!("{v} not in (0, 1]")))
            }
        };
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(config_error(key, format!("{v} must be positive")))
            }
        };
        let non_negative = |key: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(config_error(key, format!("{v} must be >= 0")))
            }
        };
        open_unit("pump_fraction", self.pump_fraction)?;
        positive("opa_linewidth", self.opa_linewidth)?;
        ratio("opa_out_coupling_ratio", self.opa_out_coupling_ratio)?;
        positive("memory_linewidth_ratio", self.memory_linewidth_ratio)?;
        ratio("memory_in_coupling_ratio", self.memory_in_coupling_ratio)?;
        non_negative("excess_loss_db_per_arm", self.excess_loss_db_per_arm)?;
        non_negative("fiber_loss_db_per_km", self.fiber_loss_db_per_km)?;
        positive("trial_rate_hz", self.trial_rate_hz)?;
        for (key, v) in [
            ("slot_s", self.slot_s),
            ("load_s", self.load_s),
            ("pump_s", self.pump_s),
            ("verify_s", self.verify_s),
        ] {
            positive(key, v)?;
        }
        self.schedule().map_err(|e| config_error("trial_rate_hz", e.to_string()))?;
        Ok(())
    }

    pub fn opa(&self) -> Result<OpaParams> {
        OpaParams::from_pump_fraction(self.pump_fraction, self.opa_linewidth, self.opa_out_coupling_ratio)
    }

    pub fn memory(&self) -> Result<MemoryCavityParams> {
        let total = self.memory_linewidth_ratio * self.opa_linewidth;
        MemoryCavityParams::new(total, self.memory_in_coupling_ratio * total, self.load_s)
    }

    pub fn schedule(&self) -> Result<TrialSchedule> {
        let s = TrialSchedule {
            slot_s: self.slot_s,
            load_s: self.load_s,
            pump_s: self.pump_s,
            verify_s: self.verify_s,
            trial_period_s: 1.0 / self.trial_rate_hz,
        };
        s.validate()?;
        Ok(s)
    }

    /// Operating point for a total path `2L` of `total_path_km`.
    pub fn operating_point(&self, total_path_km: f64) -> Result<OperatingPoint> {
        self.validate()?;
        let point = OperatingPoint {
            opa: self.opa()?,
            mem: self.memory()?,
            channel: ChannelParams::new(0.5 * total_path_km, self.fiber_loss_db_per_km, self.excess_loss_db_per_arm)?,
            trial_rate_hz: self.trial_rate_hz,
        };
        point.validate()?;
        Ok(point)
    }

    /// Renders the config in its own file format.
    pub fn to_text(&self) -> String {
        let mut copy = *self;
        let mut out = String::new();
        for key in KEYS {
            let v = *copy.slot(key).expect("listed key");
            let _ = writeln!(out, "{key} = {v:?}");
        }
        out
    }
}
