use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// PI gains and output range. Anti-windup is by clamping: the integrator is
/// frozen while the output sits on a limit and the error pushes further out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
    pub output_min: f64,
    pub output_max: f64,
}

impl PiGains {
    pub fn symmetric(kp: f64, ki: f64, limit: f64) -> Self {
        Self {
            kp,
            ki,
            output_min: -limit,
            output_max: limit,
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.kp >= 0.0 && self.kp.is_finite()) {
            return Err(Error::config(format!("{prefix}.kp"), format!("must be ≥ 0, got {}", self.kp)));
        }
        if !(self.ki >= 0.0 && self.ki.is_finite()) {
            return Err(Error::config(format!("{prefix}.ki"), format!("must be ≥ 0, got {}", self.ki)));
        }
        if !(self.output_min < self.output_max) {
            return Err(Error::config(
                format!("{prefix}.output_min"),
                format!("must be below output_max ({} ≥ {})", self.output_min, self.output_max),
            ));
        }
        Ok(())
    }
}

/// Integrator state, stored in output units so it can be pre-loaded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PiState {
    pub integrator: f64,
}

impl PiState {
    /// Output is `kp·e + I`; afterwards `I += ki·e·dt` unless that would wind
    /// further into saturation.
    pub fn step(&mut self, error: f64, gains: &PiGains, dt: f64) -> f64 {
        let raw = gains.kp * error + self.integrator;
        let out = raw.clamp(gains.output_min, gains.output_max);
        let pushing_out = (raw >= gains.output_max && error > 0.0) || (raw <= gains.output_min && error < 0.0);
        if !pushing_out {
            self.integrator += gains.ki * error * dt;
        }
        out
    }

    /// Set the integrator so the next output for `error` equals `target`.
    pub fn preload(&mut self, target: f64, error: f64, gains: &PiGains) {
        self.integrator = target - gains.kp * error;
    }

    pub fn reset(&mut self) {
        self.integrator = 0.0;
    }
}
