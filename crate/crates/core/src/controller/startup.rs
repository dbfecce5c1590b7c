//! I-f startup: a fixed-magnitude current vector whose frame is obtained by
//! integrating a ramped speed command.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::Dq;
use crate::plant::check_positive;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IfStartupParams {
    /// Speed-ramp slope (electrical rad/s²).
    pub k_omega: f64,
    /// q*-axis current held during startup (A).
    pub i_q_star: f64,
    /// d*-axis current (A).
    pub i_d_star: f64,
    /// Target electrical speed (rad/s).
    pub omega_target: f64,
    /// Initial lag of the virtual frame behind the rotor (rad).
    pub initial_lag: f64,
}

impl Default for IfStartupParams {
    fn default() -> Self {
        Self {
            k_omega: 150.0,
            i_q_star: 2.0,
            i_d_star: 0.0,
            // 300 rpm at 6 pole pairs
            omega_target: TAU * 30.0,
            initial_lag: FRAC_PI_2,
        }
    }
}

impl IfStartupParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        check_positive(prefix, "k_omega", self.k_omega, "rad/s²")?;
        check_positive(prefix, "omega_target", self.omega_target, "rad/s")?;
        if !(self.i_q_star >= 0.0 && self.i_q_star.is_finite()) {
            return Err(Error::config(
                format!("{prefix}.i_q_star"),
                format!("must be ≥ 0 (A), got {}", self.i_q_star),
            ));
        }
        if !self.i_d_star.is_finite() {
            return Err(Error::config(format!("{prefix}.i_d_star"), "must be finite (A)"));
        }
        if !(self.initial_lag > 0.0 && self.initial_lag <= PI) {
            return Err(Error::config(
                format!("{prefix}.initial_lag"),
                format!("must lie in (0, π] (rad), got {}", self.initial_lag),
            ));
        }
        Ok(())
    }

    /// Time at which the speed ramp reaches the target.
    pub fn ramp_end(&self) -> f64 {
        self.omega_target / self.k_omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfReference {
    pub theta_star: f64,
    pub omega_star: f64,
    pub i_dq_ref: Dq,
}

/// Speed command `min(K_ω·t, ω_target)` and one forward-Euler step of the
/// frame angle from `theta_star_prev`.
pub fn if_reference(t: f64, p: &IfStartupParams, theta_star_prev: f64, dt: f64) -> IfReference {
    let omega_star = (p.k_omega * t).min(p.omega_target);
    IfReference {
        theta_star: theta_star_prev + omega_star * dt,
        omega_star,
        i_dq_ref: Dq::new(p.i_d_star, p.i_q_star),
    }
}
