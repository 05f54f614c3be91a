//! Per-arm loss budget.

use crate::error::{invalid, Result};

/// Loss budget of one source-to-memory arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Fiber length of this arm (L, not 2L), km.
    pub length_km: f64,
    pub fiber_loss_db_per_km: f64,
    /// Fixed loss of the whole arm, independent of length, dB.
    pub excess_loss_db: f64,
}

impl ChannelParams {
    pub fn new(length_km: f64, fiber_loss_db_per_km: f64, excess_loss_db: f64) -> Result<Self> {
        let p = Self {
            length_km,
            fiber_loss_db_per_km,
            excess_loss_db,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length_km", self.length_km),
            ("fiber_loss_db_per_km", self.fiber_loss_db_per_km),
            ("excess_loss_db", self.excess_loss_db),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("{v} must be finite and >= 0")));
            }
        }
        if arm_transmissivity(self) <= 0.0 {
            return Err(invalid("length_km", "total loss underflows to zero transmissivity"));
        }
        Ok(())
    }

    pub fn total_loss_db(&self) -> f64 {
        self.excess_loss_db + self.fiber_loss_db_per_km * self.length_km
    }

    pub fn with_length(self, length_km: f64) -> Self {
        Self { length_km, ..self }
    }
}

/// End-to-end power transmission η of one arm.
pub fn arm_transmissivity(params: &ChannelParams) -> f64 {
    10f64.powf(-params.total_loss_db() / 10.0)
}
